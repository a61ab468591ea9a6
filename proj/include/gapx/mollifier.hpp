#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gapx/seppoly.hpp"
#include "gapx/space_net.hpp"

namespace gapx {

// The scalar bump b: equals 1 exactly outside (2g1, M+2), equals 0 exactly on
// [3g1, M+1], quintic smoothstep on the two transition intervals. b is
// monotone on each transition, so every sublevel set {b < s} is an interval.
struct BumpSpec {
    double gamma1 = 0.0;
    double M = 0.0;

    double operator()(double t) const;
    // Common Lipschitz constant of b and of every tensor bump b_n:
    // max slope of the quintic is 15/8 over the narrower transition.
    double lb() const { return 15.0 / (8.0 * std::min(gamma1, 1.0)); }
    // Endpoints of {b < s} for s in (0, 1].
    double level_lo(double s) const;
    double level_hi(double s) const;
    void validate() const;
};

// b_n(y) = 1 - max_j b(y_j): zero outside the closed box A_n, one on A_n'.
double bump_bn(const BumpSpec& bump, std::span<const double> y);

enum class NuBackend { layercake, montecarlo };

struct NuOptions {
    double quad_tol = 1e-9;
    int mc_samples = 100000;
    // Counter-based seed context; callers mix in a point identity so batch
    // evaluation is reproducible under any thread schedule.
    std::uint64_t seed_key = 0;
};

struct NuResult {
    double value = 0.0;
    double err = 0.0;  // quadrature error estimate / Monte Carlo standard error
};

// The smoothed coordinate functionals nu_n and the kappa schedule.
//
// nu_n(x) = E[ min_j (1 - b(Y_j)) ],  Y_j ~ N(x_j, sigma_j^2) independent,
// sigma_j^2 = 2^{j-1} / kappa_n. All normalization constants are kept in log
// space; kappa_n grows geometrically and would overflow any direct form.
class MollifierFamily {
public:
    MollifierFamily(BumpSpec bump, double gamma2, std::size_t n_max);

    const BumpSpec& bump() const { return bump_; }
    double gamma2() const { return gamma2_; }
    std::size_t n_max() const { return n_max_; }

    // Natural logs; n and j are 1-based as in sigma_j^2 = 2^{j-1}/kappa_n.
    double log_kappa(std::size_t n) const { return log_kappa_.at(n - 1); }
    double log_sigma(std::size_t j, std::size_t n) const;
    double log_T_hat(std::size_t n) const;  // integral of the unscaled kernel
    double log_T(std::size_t n) const;      // T_hat / kappa^{n/2}
    double log_vol_A(std::size_t n) const;  // (M+2-2g1)^n

    // 1 - prod_j erf(g2 / (2 sqrt2 sigma_j)): Gaussian mass outside the
    // sup-norm ball of radius g2/2. The schedule keeps this below 0.05.
    double tail_quantity(std::size_t n) const;
    // Replays the schedule inequalities for n.
    bool schedule_ok(std::size_t n) const;

    // nu_n at the coordinate vector; n = coords.size() selects kappa_n.
    NuResult nu(std::span<const double> coords, NuBackend backend, const NuOptions& opts) const;

    // phi_n(x) for every n = 0..N in one pass, given dq_j = q(x - x_j).
    // Exploits that coordinates contribute identically-1 or identically-0
    // factors once their Gaussian sits 16 sigma inside a flat region of b
    // (error below N * 6.4e-58, i.e. exact in doubles), and that some
    // coordinate of a covered point is eventually certified dead, after
    // which every later phi_n is 0.
    struct Sweep {
        std::vector<double> phi;  // size n_max+1, phi[0] = 1
        std::size_t n_zero = 0;   // first n with certified phi_n = 0 (n_max+1 if none)
        std::size_t quad_evals = 0;
        double max_err = 0.0;
    };
    Sweep phi_sweep(std::span<const double> dq, NuBackend backend, const NuOptions& opts) const;

private:
    BumpSpec bump_;
    double gamma2_ = 0.0;
    std::size_t n_max_ = 0;
    std::vector<double> log_kappa_;
};

// phi_n(x) = nu_n({q(x - x_j)}_{j<=n}); phi_0 = 1 identically.
double phi_n(const MollifierFamily& fam, const SepPolyQ& q, const Net& net, std::span<const double> x,
             std::size_t n, NuBackend backend = NuBackend::layercake, const NuOptions& opts = {});

// Runs both backends; consistent iff they agree within 5 standard errors
// (plus a 1e-9 absolute allowance for the exactly-flat regions).
struct NuCrossCheck {
    NuResult layercake;
    NuResult montecarlo;
    bool consistent = false;
};
NuCrossCheck nu_cross_check(const MollifierFamily& fam, std::span<const double> coords, const NuOptions& opts);

}  // namespace gapx
