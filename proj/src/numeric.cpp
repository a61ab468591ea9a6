#include "gapx/numeric.hpp"

#include <array>

namespace gapx {

namespace {

constexpr int kTableSize = 4097;

// S^{-1} sampled on a uniform grid of s-values.
const std::array<double, kTableSize>& inverse_table() {
    static const std::array<double, kTableSize> table = [] {
        std::array<double, kTableSize> t{};
        for (int i = 0; i < kTableSize; ++i) {
            double s = static_cast<double>(i) / (kTableSize - 1);
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                (smoothstep(mid) < s ? lo : hi) = mid;
            }
            t[static_cast<std::size_t>(i)] = 0.5 * (lo + hi);
        }
        t[0] = 0.0;
        t[kTableSize - 1] = 1.0;
        return t;
    }();
    return table;
}

}  // namespace

double smoothstep_inverse(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const auto& table = inverse_table();
    double pos = s * (kTableSize - 1);
    int i = std::min(static_cast<int>(pos), kTableSize - 2);
    double lo = table[static_cast<std::size_t>(i)];
    double hi = table[static_cast<std::size_t>(i) + 1];
    for (int it = 0; it < 34; ++it) {
        double mid = 0.5 * (lo + hi);
        (smoothstep(mid) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace gapx
