#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace gapx {

// splitmix64: tiny, platform-stable generator. Used everywhere instead of
// std distributions so that reruns are bit-identical across compilers.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Hash-combine for counter-based seeding: seed derived from (key parts),
// independent of call order or thread scheduling.
inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}
inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return seed_mix(seed_mix(a, b), c);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0,1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
    // uniform in [lo,hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (pairs cached)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0,1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Radical-inverse Halton sequence, one prime base per dimension.
// Deterministic quasi-random points for evaluation grids and samplers.
class Halton {
public:
    explicit Halton(int dim, std::size_t skip = 64) : dim_(dim), index_(skip) {
        static constexpr int primes[16] = {2,  3,  5,  7,  11, 13, 17, 19,
                                           23, 29, 31, 37, 41, 43, 47, 53};
        bases_.reserve(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) bases_.push_back(primes[i % 16] + 53 * (i / 16));
    }

    // next point in [0,1)^dim
    void next(std::span<double> out) {
        ++index_;
        for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] = radical_inverse(index_, bases_[static_cast<std::size_t>(i)]);
    }

private:
    static double radical_inverse(std::size_t n, int base) {
        double inv = 1.0 / base, f = inv, v = 0.0;
        while (n > 0) {
            v += f * static_cast<double>(n % static_cast<std::size_t>(base));
            n /= static_cast<std::size_t>(base);
            f *= inv;
        }
        return v;
    }

    int dim_;
    std::size_t index_;
    std::vector<int> bases_;
};

}  // namespace gapx
