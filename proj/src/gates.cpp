#include "gapx/gates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gapx/errors.hpp"
#include "gapx/numeric.hpp"

namespace gapx {

namespace {

// 0.5 (1 + tanh z), with hard saturation where tanh rounds to +-1 anyway.
double sigma01(double z) {
    if (z >= 19.1) return 1.0;
    if (z <= -19.1) return 0.0;
    return 0.5 * (1.0 + std::tanh(z));
}

// sech^2(z) = 4 e^{-2|z|} / (1 + e^{-2|z|})^2
double sech2(double z) {
    double e = std::exp(-2.0 * std::abs(z));
    double d = 1.0 + e;
    return 4.0 * e / (d * d);
}

double cheb_eval(const std::vector<double>& c, double lo, double hi, double t) {
    double u = (2.0 * t - lo - hi) / (hi - lo);
    double b0 = 0.0, b1 = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        double b2 = b1;
        b1 = b0;
        b0 = 2.0 * u * b1 - b2 + c[i];
    }
    return b0 - u * b1;
}

}  // namespace

Gate Gate::sigmoid(double base, double amp, double sharpness, double center, bool falling) {
    Gate g;
    g.kind_ = Kind::sigmoid;
    g.base_ = base;
    g.amp_ = amp;
    g.k_ = sharpness;
    g.t0_ = center;
    g.falling_ = falling;
    return g;
}

Gate Gate::polynomial(std::vector<double> cheb_coeffs, double lo, double hi) {
    Gate g;
    g.kind_ = Kind::polynomial;
    g.cheb_ = std::move(cheb_coeffs);
    g.lo_ = lo;
    g.hi_ = hi;
    return g;
}

Gate Gate::with_sharpness(double k) const {
    Gate g = *this;
    g.k_ = k;
    return g;
}

double Gate::operator()(double t) const {
    if (kind_ == Kind::sigmoid) {
        double z = k_ * (t - t0_);
        return base_ + amp_ * sigma01(falling_ ? -z : z);
    }
    return cheb_eval(cheb_, lo_, hi_, t);
}

double Gate::deriv_bound(double a, double b) const {
    if (kind_ == Kind::sigmoid) {
        // |g'| = amp k/2 sech^2(k (t - t0)); monotone away from t0
        double dist = 0.0;
        if (t0_ < a) dist = a - t0_;
        else if (t0_ > b) dist = t0_ - b;
        return 0.5 * amp_ * k_ * sech2(k_ * dist);
    }
    // coefficient bound: |T_n'| <= n^2 on [-1,1]
    double s = 0.0;
    for (std::size_t i = 1; i < cheb_.size(); ++i) s += std::abs(cheb_[i]) * static_cast<double>(i) * static_cast<double>(i);
    return s * 2.0 / (hi_ - lo_);
}

double Gate::sup(double a, double b) const {
    if (kind_ == Kind::sigmoid) return std::max((*this)(a), (*this)(b));
    double d = deriv_bound(a, b);
    int steps = 2048;
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= steps; ++i) {
        double t = a + (b - a) * i / steps;
        m = std::max(m, (*this)(t));
    }
    return m + d * (b - a) / steps * 0.5;
}

namespace {

// Certified check of one constraint by recursive bisection: an interval is
// accepted once the midpoint value plus the local slope bound times the
// half-width clears the threshold.
struct CertState {
    const Gate* gate;
    const GateConstraint* con;
    double worst_margin = std::numeric_limits<double>::infinity();
    double worst_at = 0.0;
    bool failed = false;
    double fail_at = 0.0;
    int leaves = 0;
};

void certify_rec(CertState& st, double a, double b, int depth) {
    if (st.failed) return;
    double mid = 0.5 * (a + b);
    double v = (*st.gate)(mid);
    double point_margin = st.con->rel == GateConstraint::Rel::at_least ? v - st.con->threshold
                                                                       : st.con->threshold - v;
    if (point_margin <= 0.0) {
        st.failed = true;
        st.fail_at = mid;
        st.worst_margin = std::min(st.worst_margin, point_margin);
        st.worst_at = mid;
        return;
    }
    double slack = st.gate->deriv_bound(a, b) * 0.5 * (b - a);
    if (slack < 0.5 * point_margin || depth > 60) {
        double certified = point_margin - slack;
        if (certified < st.worst_margin) {
            st.worst_margin = certified;
            st.worst_at = mid;
        }
        if (certified <= 0.0) {
            st.failed = true;
            st.fail_at = mid;
        }
        ++st.leaves;
        return;
    }
    certify_rec(st, a, mid, depth + 1);
    certify_rec(st, mid, b, depth + 1);
}

// Slack budget for a constraint: distance from its threshold to the nearest
// opposing one (the fitter must leave at least 10% of it as margin).
double slack_budget(const GateSpec& spec, const GateConstraint& con) {
    double budget = std::numeric_limits<double>::infinity();
    for (const auto& other : spec.constraints) {
        if (other.rel == con.rel) continue;
        budget = std::min(budget, std::abs(other.threshold - con.threshold));
    }
    if (!std::isfinite(budget)) budget = std::max(1e-3, 0.5 * std::abs(con.threshold));
    return budget;
}

bool meets_10pct(const GateSpec& spec, const MarginReport& rep) {
    if (!rep.pass) return false;
    for (std::size_t i = 0; i < spec.constraints.size(); ++i)
        if (rep.entries[i].margin < 0.1 * slack_budget(spec, spec.constraints[i])) return false;
    return true;
}

Gate fit_sigmoid(const GateSpec& spec) {
    // Identify the ramp: the pair of opposing constraints with the smallest
    // threshold separation determines orientation and the transition window.
    const GateConstraint* low_side = nullptr;   // applies on the left subinterval
    const GateConstraint* high_side = nullptr;  // applies on the right subinterval
    for (const auto& c : spec.constraints) {
        bool whole = c.lo <= spec.dom_lo + 1e-300 && c.hi >= spec.dom_hi - 1e-300;
        if (whole) continue;
        if (c.hi < spec.dom_hi) {
            if (!low_side || c.hi < low_side->hi) low_side = &c;
        }
        if (c.lo > spec.dom_lo) {
            if (!high_side || c.lo > high_side->lo) high_side = &c;
        }
    }
    if (!low_side || !high_side || low_side == high_side || low_side->hi >= high_side->lo)
        throw ConfigError("fit_gate: constraints do not leave a transition gap");

    bool falling = low_side->rel == GateConstraint::Rel::at_least;
    const GateConstraint& below = falling ? *high_side : *low_side;
    const GateConstraint& above = falling ? *low_side : *high_side;
    if (below.rel != GateConstraint::Rel::below || above.rel != GateConstraint::Rel::at_least)
        throw ConfigError("fit_gate: transition constraints must oppose each other");
    if (!(below.threshold < above.threshold)) throw ConfigError("fit_gate: thresholds are not separated");

    // Global floor / cap over the whole domain, if present.
    double floor = -std::numeric_limits<double>::infinity();
    double cap = std::numeric_limits<double>::infinity();
    for (const auto& c : spec.constraints) {
        bool whole = c.lo <= spec.dom_lo + 1e-300 && c.hi >= spec.dom_hi - 1e-300;
        if (!whole) continue;
        if (c.rel == GateConstraint::Rel::at_least) floor = std::max(floor, c.threshold);
        else cap = std::min(cap, c.threshold);
    }
    if (below.threshold <= floor) throw ConfigError("fit_gate: floor excludes the low plateau");
    if (above.threshold >= cap) throw ConfigError("fit_gate: cap excludes the high plateau");

    double plateau_lo = std::isfinite(floor) ? 0.5 * (floor + below.threshold) : 0.25 * below.threshold;
    double plateau_hi = above.threshold + 0.25 * (above.threshold - below.threshold);
    if (std::isfinite(cap)) plateau_hi = std::min(plateau_hi, 0.5 * (above.threshold + cap));
    double amp = plateau_hi - plateau_lo;

    double t_a = falling ? above.hi : below.hi;  // end of the left flat region
    double t_b = falling ? below.lo : above.lo;  // start of the right flat region
    double center = 0.5 * (t_a + t_b);
    double w = t_b - t_a;

    // sharpness so the residual at the window edges is half the available slack
    double q = 0.5 * std::min(below.threshold - plateau_lo, plateau_hi - above.threshold) / amp;
    q = std::clamp(q, 1e-9, 0.49);
    double z = 0.5 * std::log((1.0 - q) / q);
    double k = 2.0 * z / w;

    for (int attempt = 0; attempt < 64; ++attempt) {
        Gate g = Gate::sigmoid(plateau_lo, amp, k, center, falling);
        MarginReport rep = certify_gate(g, spec);
        if (meets_10pct(spec, rep)) return g;
        k *= 1.5;
    }
    throw ConfigError("fit_gate: sigmoid sharpness escalation failed to certify");
}

Gate fit_polynomial(const GateSpec& spec) {
    // Least-squares Chebyshev fit to the certified sigmoid profile, degree
    // escalated until certification passes.
    Gate profile = fit_sigmoid(spec);
    for (int degree = 8; degree <= spec.degree_budget; degree += 4) {
        int m = 2 * degree + 1;  // Chebyshev nodes
        std::vector<double> vals(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            double u = std::cos(M_PI * (i + 0.5) / m);
            double t = 0.5 * (spec.dom_lo + spec.dom_hi) + 0.5 * (spec.dom_hi - spec.dom_lo) * u;
            vals[static_cast<std::size_t>(i)] = profile(t);
        }
        std::vector<double> coeff(static_cast<std::size_t>(degree + 1), 0.0);
        for (int kidx = 0; kidx <= degree; ++kidx) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += vals[static_cast<std::size_t>(i)] * std::cos(M_PI * kidx * (i + 0.5) / m);
            coeff[static_cast<std::size_t>(kidx)] = (kidx == 0 ? 1.0 : 2.0) * s / m;
        }
        Gate g = Gate::polynomial(coeff, spec.dom_lo, spec.dom_hi);
        MarginReport rep = certify_gate(g, spec);
        if (meets_10pct(spec, rep)) return g;
    }
    throw ConfigError("fit_gate: polynomial degree budget exhausted");
}

}  // namespace

Gate fit_gate(const GateSpec& spec) {
    if (spec.constraints.empty()) throw ConfigError("fit_gate: no constraints");
    if (!(spec.dom_lo < spec.dom_hi)) throw ConfigError("fit_gate: empty domain");
    return spec.mode == GateMode::sigmoid ? fit_sigmoid(spec) : fit_polynomial(spec);
}

MarginReport certify_gate(const Gate& gate, const GateSpec& spec) {
    MarginReport rep;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    rep.pass = true;
    for (const auto& con : spec.constraints) {
        CertState st{&gate, &con};
        double a = std::max(con.lo, spec.dom_lo), b = std::min(con.hi, spec.dom_hi);
        if (a < b) certify_rec(st, a, b, 0);
        MarginEntry e{con.name, st.failed ? std::min(st.worst_margin, 0.0) : st.worst_margin,
                      st.failed ? st.fail_at : st.worst_at};
        if (st.failed) rep.pass = false;
        rep.worst_margin = std::min(rep.worst_margin, e.margin);
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

GateSet GateSet::build(double gamma2, double gamma3, double M, double eps, GateMode mode, int degree_budget) {
    if (!(gamma2 > 0.0 && gamma2 < gamma3 && gamma3 < 1.0)) throw ConfigError("gates: need 0 < gamma2 < gamma3 < 1");
    if (!(eps > 0.0 && eps < 0.25)) throw ConfigError("gates: eps must lie in (0, 1/4)");
    if (!(M >= 1.0)) throw ConfigError("gates: M must be at least 1");

    GateSet gs;
    gs.eps = eps;
    gs.dom1_hi = 1.01 * M;
    gs.dom2_hi = 1.05;

    GateSpec s1;
    s1.dom_lo = 0.0;
    s1.dom_hi = gs.dom1_hi;
    s1.mode = mode;
    s1.degree_budget = degree_budget;
    s1.constraints = {
        {GateConstraint::Rel::below, 0.25, 0.0, gamma2, "zeta1 < 1/4 on [0, gamma2]"},
        {GateConstraint::Rel::at_least, 1.0, gamma3, gs.dom1_hi, "zeta1 >= 1 on [gamma3, 1.01M]"},
        {GateConstraint::Rel::at_least, 0.125, 0.0, gs.dom1_hi, "zeta1 >= 1/8 everywhere"},
    };
    gs.zeta1 = fit_gate(s1);
    gs.rep1 = certify_gate(gs.zeta1, s1);

    GateSpec s2;
    s2.dom_lo = 0.0;
    s2.dom_hi = gs.dom2_hi;
    s2.mode = mode;
    s2.degree_budget = degree_budget;
    s2.constraints = {
        {GateConstraint::Rel::at_least, 2.0, 0.0, 0.25, "zeta2 >= 2 on [0, 1/4]"},
        {GateConstraint::Rel::below, 0.25, 0.5, gs.dom2_hi, "zeta2 < 1/4 on [1/2, 1.05]"},
        {GateConstraint::Rel::at_least, 0.125, 0.0, gs.dom2_hi, "zeta2 >= 1/8 everywhere"},
    };
    gs.zeta2 = fit_gate(s2);
    gs.rep2 = certify_gate(gs.zeta2, s2);

    gs.L_zeta1 = gs.zeta1.lipschitz(0.0, gs.dom1_hi);
    gs.L2 = std::max(1.0, gs.zeta2.lipschitz(0.0, gs.dom2_hi));
    gs.T = gs.zeta1.sup(0.0, gs.dom1_hi) + gs.zeta2.sup(0.0, gs.dom2_hi);

    GateSpec sh;
    sh.dom_lo = 0.0;
    sh.dom_hi = gs.T;
    sh.mode = mode;
    sh.degree_budget = degree_budget;
    sh.constraints = {
        {GateConstraint::Rel::at_least, 0.8, 0.0, 0.5, "h >= 4/5 on [0, 1/2]"},
        {GateConstraint::Rel::below, 0.25 * eps, 0.75, gs.T, "h < eps/4 on [3/4, T]"},
        {GateConstraint::Rel::below, 1.0, 0.0, gs.T, "h < 1 everywhere"},
        {GateConstraint::Rel::at_least, 0.0, 0.0, gs.T, "h > 0 everywhere"},
    };
    gs.h = fit_gate(sh);
    gs.reph = certify_gate(gs.h, sh);
    gs.L_h = std::max(1.0, gs.h.lipschitz(0.0, gs.T));

    if (!gs.rep1.pass || !gs.rep2.pass || !gs.reph.pass)
        throw InvariantViolation("gates: certification failed after fitting");
    return gs;
}

double GateSet::psi(double q_value, double phi_prev) const {
    if (!(q_value >= 0.0 && q_value <= dom1_hi))
        throw InvariantViolation("psi: q(x - x_j) outside the certified zeta1 domain");
    if (!(phi_prev >= -1e-9 && phi_prev <= dom2_hi))
        throw InvariantViolation("psi: phi outside the certified zeta2 domain");
    return zeta1(q_value) + zeta2(std::max(0.0, phi_prev));
}

double GateSet::u_of_psi(double psi_value) const {
    if (!(psi_value >= 0.0 && psi_value <= T * (1.0 + 1e-12)))
        throw InvariantViolation("u: psi outside [0, T]; T is mis-sized");
    return h(std::min(psi_value, T));
}

double psi_j(const GateSet& gs, const SepPolyQ& q, const Net& net, const MollifierFamily& fam,
             std::span<const double> x, std::size_t j, NuBackend backend, const NuOptions& opts) {
    if (j < 1 || j > net.count) throw std::out_of_range("psi_j: index out of range");
    auto xj = net.point(j - 1);
    std::vector<double> diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - xj[i];
    double qv = q(diff);
    double phi = phi_n(fam, q, net, x, j - 1, backend, opts);
    return gs.psi(qv, phi);
}

double u_j(const GateSet& gs, const SepPolyQ& q, const Net& net, const MollifierFamily& fam,
           std::span<const double> x, std::size_t j, NuBackend backend, const NuOptions& opts) {
    return gs.u_of_psi(psi_j(gs, q, net, fam, x, j, backend, opts));
}

}  // namespace gapx
