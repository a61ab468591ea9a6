#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapx/approximant.hpp"
#include "gapx/gauge.hpp"
#include "gapx/seppoly.hpp"

namespace gapx::verify {

struct PropertyResult {
    std::string name;
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst_margin = 0.0;  // smallest slack seen (negative = violated)
    std::string note;

    bool pass() const { return violations == 0; }
    nlohmann::json to_json() const;
};

bool all_pass(const std::vector<PropertyResult>& results);

// Sandwich, homogeneity, subadditivity, 1-Lipschitz, bracket monotonicity and
// oracle agreement over random vectors (lengths 1-50, entries in [-2,2]).
std::vector<PropertyResult> gauge_battery(std::size_t n_vectors, std::uint64_t seed,
                                          const GaugeConfig& cfg = {});

// Nonnegativity/evenness, the sublevel lower bound, the K1 upper bound and
// the Lipschitz bound for one q instance (constants must be derived).
std::vector<PropertyResult> lemma2_battery(const SepPolyQ& q, double R, std::size_t n_samples,
                                           std::uint64_t seed);

// Mollifier battery on a built pipeline: range, emergence, uniform Lipschitz,
// localization and the backend cross-check.
std::vector<PropertyResult> lemma3_battery(const Approximant& ap, std::size_t ul_pairs,
                                           std::size_t backend_checks, std::size_t emergence_points,
                                           std::uint64_t seed);

// Gate battery: off-support psi >= 1, first-cover psi < 1/2, off-support
// u < eps/4, u range and the scaled-vector gauge admissibility.
std::vector<PropertyResult> lemma4_battery(const Approximant& ap, std::size_t points, std::uint64_t seed);

// Theorem-level battery: sup error, denominator floor, gauge transfer
// inequalities, range containment.
std::vector<PropertyResult> theorem1_battery(const Approximant& ap, std::size_t points, std::uint64_t seed);

}  // namespace gapx::verify
