#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace gapx {

inline constexpr double kLn2 = 0.69314718055994530941723212145818;
inline constexpr double kLnPi = 1.1447298858494001741434273513531;
inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;

// x^n by repeated squaring; exact for the even powers the gauge needs.
inline double pow_int(double x, unsigned n) {
    double r = 1.0, b = x;
    while (n) {
        if (n & 1u) r *= b;
        b *= b;
        n >>= 1u;
    }
    return r;
}

struct KahanSum {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        double y = v - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

// P(zlo < Z < zhi) for standard normal Z, stable in both tails.
inline double normal_interval_mass(double zlo, double zhi) {
    if (!(zlo < zhi)) return 0.0;
    const double a = zlo / kSqrt2, b = zhi / kSqrt2;
    if (a >= 0.0)  // both right of center: difference of upper tails
        return 0.5 * (std::erfc(a) - std::erfc(b));
    if (b <= 0.0)
        return 0.5 * (std::erfc(-b) - std::erfc(-a));
    return 0.5 * (std::erf(b) - std::erf(a));
}

// P(Z > z), upper tail of the standard normal.
inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / kSqrt2); }

// log(erf(z)) for z > 0 without underflow of the complement.
inline double log_erf(double z) {
    if (z > 8.0) {
        // erfc(z) ~ exp(-z^2)/(z sqrt(pi)); below ~1e-300 the log is -erfc directly
        double lc = -z * z - std::log(z) - 0.5 * kLnPi;
        return (lc < -700.0) ? 0.0 : std::log1p(-std::exp(lc));
    }
    return std::log(std::erf(z));
}

// Quintic smoothstep on [0,1]: S(0)=0, S(1)=1, S'(0)=S'(1)=0, max slope 15/8.
inline double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline double smoothstep_deriv(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    double t = u * (1.0 - u);
    return 30.0 * t * t;
}

// Inverse of the quintic smoothstep on [0,1], via a cached table plus
// bisection refinement (the inverse has infinite slope at the endpoints,
// so Newton alone is not safe there).
double smoothstep_inverse(double s);

// Static block partition over [0,n). Results must be written by index so the
// output is identical for any worker count.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& run_block) {
    if (workers <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        workers = static_cast<int>(hc == 0 ? 1 : std::min(hc, 16u));
    }
    std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n ? n : 1);
    if (w <= 1) {
        run_block(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(w);
    std::size_t chunk = (n + w - 1) / w;
    for (std::size_t t = 0; t < w; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&run_block, lo, hi] { run_block(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace gapx
