#pragma once

#include <span>
#include <string>
#include <vector>

#include "gapx/mollifier.hpp"
#include "gapx/seppoly.hpp"
#include "gapx/space_net.hpp"

namespace gapx {

enum class GateMode { sigmoid, polynomial };

struct GateConstraint {
    enum class Rel { at_least, below };
    Rel rel;
    double threshold;
    double lo, hi;  // sub-interval of the gate domain where the bound applies
    std::string name;
};

struct GateSpec {
    double dom_lo = 0.0, dom_hi = 1.0;
    std::vector<GateConstraint> constraints;
    GateMode mode = GateMode::sigmoid;
    int degree_budget = 64;
};

// A certified scalar gate: either a single tanh ramp between two plateaus
// (genuinely real-analytic, closed-form derivative bound) or a Chebyshev
// polynomial fit.
class Gate {
public:
    enum class Kind { sigmoid, polynomial };

    static Gate sigmoid(double base, double amp, double sharpness, double center, bool falling);
    static Gate polynomial(std::vector<double> cheb_coeffs, double lo, double hi);

    double operator()(double t) const;
    // sup of |g'| over [a, b] (closed form for the sigmoid, coefficient bound
    // for the polynomial)
    double deriv_bound(double a, double b) const;
    double lipschitz(double dom_lo, double dom_hi) const { return deriv_bound(dom_lo, dom_hi); }
    // certified sup over [a, b] (monotone for the sigmoid; grid+slope bound
    // for the polynomial)
    double sup(double a, double b) const;

    Kind kind() const { return kind_; }
    double sharpness() const { return k_; }
    Gate with_sharpness(double k) const;

private:
    Kind kind_ = Kind::sigmoid;
    double base_ = 0.0, amp_ = 0.0, k_ = 0.0, t0_ = 0.0;
    bool falling_ = false;
    std::vector<double> cheb_;
    double lo_ = 0.0, hi_ = 1.0;
};

struct MarginEntry {
    std::string constraint;
    double margin;  // worst certified slack; negative means violated
    double at;      // location of the worst slack
};

struct MarginReport {
    std::vector<MarginEntry> entries;
    double worst_margin = 0.0;
    bool pass = false;
};

// Builds a gate satisfying every constraint with margin at least 10% of the
// available slack budget (distance to the nearest opposing threshold).
// Throws ConfigError when the spec is unsatisfiable or the degree budget is
// exhausted in polynomial mode.
Gate fit_gate(const GateSpec& spec);

// Certified constraint check: recursive interval refinement with local
// derivative bounds, so a pass is a true certificate (up to fp rounding),
// not a sampling statement.
MarginReport certify_gate(const Gate& gate, const GateSpec& spec);

// The three gates of the pipeline, with their Lipschitz data.
struct GateSet {
    Gate zeta1, zeta2, h;
    MarginReport rep1, rep2, reph;
    double dom1_hi = 0.0;   // zeta1 certified on [0, 1.01 M]
    double dom2_hi = 0.0;   // zeta2 certified on [0, 1.05]
    double L_zeta1 = 0.0;
    double L2 = 1.0;  // >= 1
    double L_h = 1.0;  // >= 1
    double T = 0.0;   // sup zeta1 + sup zeta2 over the certified domains
    double eps = 0.0;

    static GateSet build(double gamma2, double gamma3, double M, double eps, GateMode mode = GateMode::sigmoid,
                         int degree_budget = 64);

    // psi = zeta1(q(x-x_j)) + zeta2(phi_{j-1}(x)); throws InvariantViolation
    // if either argument leaves its certified domain.
    double psi(double q_value, double phi_prev) const;
    // u = h(psi); throws InvariantViolation on psi outside [0, T].
    double u_of_psi(double psi_value) const;
};

// Spec-surface single evaluations (j is 1-based).
double psi_j(const GateSet& gs, const SepPolyQ& q, const Net& net, const MollifierFamily& fam,
             std::span<const double> x, std::size_t j, NuBackend backend = NuBackend::layercake,
             const NuOptions& opts = {});
double u_j(const GateSet& gs, const SepPolyQ& q, const Net& net, const MollifierFamily& fam,
           std::span<const double> x, std::size_t j, NuBackend backend = NuBackend::layercake,
           const NuOptions& opts = {});

}  // namespace gapx
