#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapx/gates.hpp"
#include "gapx/gauge.hpp"
#include "gapx/mollifier.hpp"
#include "gapx/seppoly.hpp"
#include "gapx/space_net.hpp"

namespace gapx {

// Bounded, uniformly continuous target with declared bounds and modulus data.
struct TargetFunction {
    std::function<double(std::span<const double>)> f;
    double declared_inf = 0.0;
    double declared_sup = 0.0;
    // Modulus: either a Lipschitz constant or a table of (eps, delta) rows
    // meaning ||x-y|| < delta implies |F(x)-F(y)| < eps.
    std::optional<double> lipschitz;
    std::vector<std::pair<double, double>> delta_table;
    bool exact_modulus = false;

    // Largest usable delta for the requested eps; infinity for flat targets.
    // Throws ConfigError when the modulus data cannot reach eps.
    double delta_for(double eps) const;
};

struct ApproximantConfig {
    double root_tol = 1e-12;
    std::size_t net_cap = 200000;
    GateMode gate_mode = GateMode::sigmoid;
    NuBackend backend = NuBackend::layercake;
    int mc_samples = 100000;
    std::uint64_t seed = 0;
    int workers = 0;  // 0 = hardware concurrency
    double quad_tol = 1e-9;
};

// Frozen pipeline state exposing K(x) and verification reports.
class Approximant {
public:
    // Normalizes F onto [1/3, 1], derives gammas / net / kappa schedule /
    // gates, and caches F at the net points. Throws CapacityError when the
    // net would exceed the cap, ConfigError on unusable target data.
    static Approximant build(TargetFunction target, Domain dom, SepPolyQ q, double eps_user,
                             ApproximantConfig cfg = {});

    struct PointEval {
        double K = 0.0;       // de-normalized value
        double F = 0.0;       // target at x
        double abs_err = 0.0;
        double K_norm = 0.0, num = 0.0, den = 0.0;
        double max_u = 0.0;
        double max_offJ_u = 0.0;       // max u_j over j not in J = {x in C_j^3}
        double max_J_dF = 0.0;         // max |F_norm(x_j) - F_norm(x)| over J
        double min_psi_offC3 = 0.0;    // min psi_j over j not in J
        std::size_t first_c2 = 0;      // 1-based first cover index at level 2
        double psi_first_c2 = 0.0;
        double lip_transfer_gap = 0.0;    // (3.5) slack, >= 0 when satisfied
        double sandwich_hi_gap = 0.0;     // (3.6) upper slack at a = 15/8
        double sandwich_lo_gap = 0.0;     // (3.6) lower slack at a = 15/8
    };

    // Full sweep at one point; throws InvariantViolation on a gate-domain
    // excursion. The denominator value is reported in the result.
    PointEval eval_point(std::span<const double> x) const;
    // Throws InvariantViolation when the denominator drops below 4/5 - 1e-6
    // (a cover or gate bug, not a data condition).
    double eval_K(std::span<const double> x) const;

    // psi_j and u_j for every j at one point (1-based j = position + 1).
    struct SweepVectors {
        std::vector<double> dq, phi, psi, u;
    };
    SweepVectors sweep_vectors(std::span<const double> x) const;

    struct Report {
        std::size_t point_count = 0;
        double sup_err = 0.0;
        double min_den = 0.0;
        double max_offJ_u = 0.0;
        double max_J_dF = 0.0;
        double min_max_u = 0.0;      // smallest over points of max_j u_j
        double min_psi_offC3 = 0.0;  // smallest off-support psi over all (x, j)
        double worst_lip_gap = 0.0;  // most negative (3.5) slack observed
        double worst_sw_gap = 0.0;   // most negative (3.6) slack observed
        bool range_ok = true;
        std::vector<PointEval> points;
    };
    // Batch evaluation, point-parallel, deterministic ordering by index.
    Report error_report(std::span<const double> points, std::size_t count) const;

    struct LipschitzReport {
        double empirical = 0.0;
        double chain_bound = 0.0;
        // (pair distance, max quotient) for the close-pair refinement
        std::vector<std::pair<double, double>> by_distance;
    };
    LipschitzReport lipschitz_estimate(std::size_t pair_count, std::uint64_t seed) const;

    nlohmann::json derived_json() const;

    const Domain& domain() const { return dom_; }
    const SepPolyQ& q() const { return q_; }
    const Net& net() const { return net_; }
    const MollifierFamily& family() const { return fam_; }
    const GateSet& gates() const { return gates_; }
    const TargetFunction& target() const { return target_; }
    const ApproximantConfig& config() const { return cfg_; }
    double norm_a() const { return a_; }
    double norm_b() const { return b_; }
    double eps_internal() const { return eps_; }
    double eps_user() const { return eps_user_; }
    double delta() const { return delta_; }
    double W1() const { return w1_; }
    bool flat() const { return flat_; }
    const std::vector<double>& f_net() const { return f_net_; }

private:
    Approximant() = default;

    Domain dom_;
    SepPolyQ q_;
    Net net_;
    MollifierFamily fam_{BumpSpec{0.01, 1.0}, 0.5, 1};
    GateSet gates_;
    GaugeConfig gauge_;
    TargetFunction target_;
    ApproximantConfig cfg_;
    double a_ = 1.0, b_ = 0.0;
    double eps_ = 0.0, eps_user_ = 0.0, delta_ = 0.0, w1_ = 0.0;
    bool flat_ = false;
    std::vector<double> f_net_;
};

}  // namespace gapx
