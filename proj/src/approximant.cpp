#include "gapx/approximant.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>

#include "gapx/errors.hpp"
#include "gapx/numeric.hpp"
#include "gapx/rng.hpp"

namespace gapx {

namespace {

// Point identity for counter-based Monte Carlo seeding: hashing the
// coordinates makes batch evaluation reproducible under any thread schedule
// and independent of batch position.
std::uint64_t point_key(std::uint64_t seed, std::span<const double> x) {
    std::uint64_t h = seed;
    for (double v : x) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = seed_mix(h, bits);
    }
    return h;
}

}  // namespace

double TargetFunction::delta_for(double eps) const {
    if (!(eps > 0.0)) throw ConfigError("target: requested modulus level must be positive");
    if (lipschitz.has_value()) {
        double L = *lipschitz;
        if (L < 0.0) throw ConfigError("target: negative Lipschitz constant");
        if (L == 0.0) return std::numeric_limits<double>::infinity();
        return eps / L;
    }
    double best = 0.0;
    for (const auto& [e, d] : delta_table)
        if (e <= eps) best = std::max(best, d);
    if (!(best > 0.0)) throw ConfigError("target: modulus table has no row usable at the requested eps");
    return best;
}

Approximant Approximant::build(TargetFunction target, Domain dom, SepPolyQ q, double eps_user,
                               ApproximantConfig cfg) {
    if (!(eps_user > 0.0)) throw ConfigError("approximant: eps must be positive");
    if (!target.f) throw ConfigError("approximant: target evaluator missing");
    if (q.dim() != dom.dim) throw ConfigError("approximant: q and domain dimensions differ");
    double inf = target.declared_inf, sup = target.declared_sup;
    if (!(std::isfinite(inf) && std::isfinite(sup) && sup >= inf))
        throw ConfigError("approximant: declared bounds must be finite with sup >= inf");

    Approximant ap;
    ap.cfg_ = cfg;
    ap.gauge_.tol = cfg.root_tol;
    ap.dom_ = dom;
    ap.eps_user_ = eps_user;

    double span = sup - inf;
    ap.flat_ = span <= 1e-14 * std::max({1.0, std::abs(sup), std::abs(inf)});
    if (ap.flat_) {
        // Degenerate normalization: shift the constant to 2/3 and run the
        // full pipeline; homogeneity of the gauge makes K exact.
        ap.a_ = 1.0;
        ap.b_ = 2.0 / 3.0 - 0.5 * (inf + sup);
    } else {
        ap.a_ = (2.0 / 3.0) / span;
        ap.b_ = 1.0 / 3.0 - ap.a_ * inf;
    }
    ap.eps_ = std::min(ap.a_ * eps_user, 0.249);
    ap.delta_ = ap.flat_ ? std::numeric_limits<double>::infinity() : target.delta_for(ap.eps_ / (4.0 * ap.a_));

    q.derive_constants(dom.R);
    GammaTriple gammas = gammas_from_delta(ap.delta_, q.degree());
    ap.net_ = build_net(dom, q, gammas, cfg.net_cap);
    ap.q_ = std::move(q);
    ap.fam_ = MollifierFamily(BumpSpec{gammas.g1, ap.q_.M()}, gammas.g2, ap.net_.count);
    ap.gates_ = GateSet::build(gammas.g2, gammas.g3, ap.q_.M(), ap.eps_, cfg.gate_mode);
    ap.w1_ = ap.fam_.bump().lb() * ap.q_.Lq() * dom.R + 1.0;

    // Cache the normalized target at the net points.
    ap.f_net_.resize(ap.net_.count);
    for (std::size_t j = 0; j < ap.net_.count; ++j) {
        double v = ap.a_ * target.f(ap.net_.point(j)) + ap.b_;
        if (v < 1.0 / 3.0 - 1e-9 || v > 1.0 + 1e-9)
            throw ConfigError("approximant: declared bounds violated at a net point");
        ap.f_net_[j] = std::clamp(v, 1.0 / 3.0, 1.0);
    }

    // Spot-check the declared bounds and modulus on sampled domain points.
    {
        auto pts = dom.quasi_random_points(256);
        double prev = 0.0;
        std::vector<double> prev_x;
        for (std::size_t i = 0; i < 256; ++i) {
            std::span<const double> x(pts.data() + i * static_cast<std::size_t>(dom.dim),
                                      static_cast<std::size_t>(dom.dim));
            double v = target.f(x);
            if (v < inf - 1e-9 * (1.0 + std::abs(inf)) || v > sup + 1e-9 * (1.0 + std::abs(sup)))
                throw ConfigError("approximant: declared bounds violated on a sampled point");
            if (i > 0 && target.lipschitz.has_value()) {
                double dist2 = 0.0;
                for (int k = 0; k < dom.dim; ++k) {
                    double dv = x[static_cast<std::size_t>(k)] - prev_x[static_cast<std::size_t>(k)];
                    dist2 += dv * dv;
                }
                double dist = std::sqrt(dist2);
                if (std::abs(v - prev) > *target.lipschitz * dist * (1.0 + 1e-6) + 1e-12)
                    throw ConfigError("approximant: declared Lipschitz constant violated on a sampled pair");
            }
            prev = v;
            prev_x.assign(x.begin(), x.end());
        }
    }

    ap.target_ = std::move(target);
    return ap;
}

Approximant::SweepVectors Approximant::sweep_vectors(std::span<const double> x) const {
    if (!dom_.contains(x)) throw std::invalid_argument("approximant: point outside the open domain");
    const std::size_t N = net_.count;
    const std::size_t d = static_cast<std::size_t>(dom_.dim);

    SweepVectors sv;
    sv.dq.resize(N);
    std::vector<double> diff(d);
    for (std::size_t j = 0; j < N; ++j) {
        const double* xj = net_.pts.data() + j * d;
        for (std::size_t i = 0; i < d; ++i) diff[i] = x[i] - xj[i];
        sv.dq[j] = q_(diff);
    }

    NuOptions opts;
    opts.quad_tol = cfg_.quad_tol;
    opts.mc_samples = cfg_.mc_samples;
    opts.seed_key = point_key(cfg_.seed, x);
    auto sweep = fam_.phi_sweep(sv.dq, cfg_.backend, opts);
    sv.phi = std::move(sweep.phi);

    sv.psi.resize(N);
    sv.u.resize(N);
    for (std::size_t c = 0; c < N; ++c) {
        sv.psi[c] = gates_.psi(sv.dq[c], sv.phi[c]);
        sv.u[c] = gates_.u_of_psi(sv.psi[c]);
    }
    return sv;
}

Approximant::PointEval Approximant::eval_point(std::span<const double> x) const {
    SweepVectors sv = sweep_vectors(x);
    const std::size_t N = net_.count;
    const GammaTriple& g = net_.gammas;

    PointEval pe;
    pe.F = target_.f(x);
    double f_norm_x = a_ * pe.F + b_;

    pe.max_u = 0.0;
    pe.max_offJ_u = 0.0;
    pe.max_J_dF = 0.0;
    pe.first_c2 = 0;
    double min_psi_off3 = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < N; ++c) {
        pe.max_u = std::max(pe.max_u, sv.u[c]);
        if (sv.dq[c] < g.g3) {
            pe.max_J_dF = std::max(pe.max_J_dF, std::abs(f_net_[c] - f_norm_x));
        } else {
            pe.max_offJ_u = std::max(pe.max_offJ_u, sv.u[c]);
            min_psi_off3 = std::min(min_psi_off3, sv.psi[c]);
        }
        if (pe.first_c2 == 0 && sv.dq[c] < g.g2) {
            pe.first_c2 = c + 1;
            pe.psi_first_c2 = sv.psi[c];
        }
    }
    if (pe.first_c2 == 0) throw InvariantViolation("approximant: no level-2 cover index found (cover bug)");

    pe.den = gauge_lambda(sv.u, gauge_);

    std::vector<double> w(N);
    for (std::size_t c = 0; c < N; ++c) w[c] = f_net_[c] * sv.u[c];
    pe.num = gauge_lambda(w, gauge_);

    pe.K_norm = pe.num / pe.den;
    pe.K = (pe.K_norm - b_) / a_;
    pe.abs_err = std::abs(pe.K - pe.F);

    // 1-Lipschitz transfer (3.5): |lambda(F_j u) - lambda(F(x) u)| <= lambda((F_j - F(x)) u)
    {
        std::vector<double> fx_u(N), dvec(N);
        double dmax = 0.0;
        for (std::size_t c = 0; c < N; ++c) {
            fx_u[c] = f_norm_x * sv.u[c];
            dvec[c] = (f_net_[c] - f_norm_x) * sv.u[c];
            dmax = std::max(dmax, std::abs(dvec[c]));
        }
        double lam_fx = gauge_lambda(fx_u, gauge_);
        double rhs = dmax < 1e-300 ? 0.0 : gauge_lambda(dvec, gauge_);
        pe.lip_transfer_gap = rhs - std::abs(pe.num - lam_fx);
    }

    // Sandwich transfer (3.6) at the extreme scaling a = 15/8.
    {
        std::vector<double> su(N);
        for (std::size_t c = 0; c < N; ++c) su[c] = 1.875 * sv.u[c];
        double lam = gauge_lambda(su, gauge_);
        double hi = 1.875 * pe.max_u;
        pe.sandwich_lo_gap = lam - hi;            // lambda >= sup norm
        pe.sandwich_hi_gap = 2.0 * hi - lam;      // lambda <= 2 sup norm
    }

    pe.min_psi_offC3 = min_psi_off3;
    return pe;
}

double Approximant::eval_K(std::span<const double> x) const {
    PointEval pe = eval_point(x);
    if (pe.den < 0.8 - 1e-6)
        throw InvariantViolation("approximant: gauge denominator below 4/5 (cover or gate bug)");
    return pe.K;
}

Approximant::Report Approximant::error_report(std::span<const double> points, std::size_t count) const {
    Report rep;
    rep.point_count = count;
    rep.points.resize(count);
    const std::size_t d = static_cast<std::size_t>(dom_.dim);

    std::exception_ptr first_error;
    std::mutex err_mutex;
    parallel_for(count, cfg_.workers, [&](std::size_t lo, std::size_t hi) {
        try {
            for (std::size_t i = lo; i < hi; ++i) {
                std::span<const double> x(points.data() + i * d, d);
                rep.points[i] = eval_point(x);
            }
        } catch (...) {
            std::scoped_lock lk(err_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    });
    if (first_error) std::rethrow_exception(first_error);

    rep.sup_err = 0.0;
    rep.min_den = std::numeric_limits<double>::infinity();
    rep.max_offJ_u = 0.0;
    rep.max_J_dF = 0.0;
    rep.min_max_u = std::numeric_limits<double>::infinity();
    rep.min_psi_offC3 = std::numeric_limits<double>::infinity();
    rep.worst_lip_gap = std::numeric_limits<double>::infinity();
    rep.worst_sw_gap = std::numeric_limits<double>::infinity();
    for (const auto& pe : rep.points) {
        rep.sup_err = std::max(rep.sup_err, pe.abs_err);
        rep.min_den = std::min(rep.min_den, pe.den);
        rep.max_offJ_u = std::max(rep.max_offJ_u, pe.max_offJ_u);
        rep.max_J_dF = std::max(rep.max_J_dF, pe.max_J_dF);
        rep.min_max_u = std::min(rep.min_max_u, pe.max_u);
        rep.min_psi_offC3 = std::min(rep.min_psi_offC3, pe.min_psi_offC3);
        rep.worst_lip_gap = std::min(rep.worst_lip_gap, pe.lip_transfer_gap);
        rep.worst_sw_gap = std::min(rep.worst_sw_gap, std::min(pe.sandwich_lo_gap, pe.sandwich_hi_gap));
        if (pe.K < target_.declared_inf - eps_user_ - 1e-9 || pe.K > target_.declared_sup + eps_user_ + 1e-9)
            rep.range_ok = false;
    }
    return rep;
}

Approximant::LipschitzReport Approximant::lipschitz_estimate(std::size_t pair_count, std::uint64_t seed) const {
    LipschitzReport lr;
    lr.chain_bound = gates_.L_h *
                     (gates_.L_zeta1 * q_.Lq() + gates_.L2 * fam_.bump().lb() * q_.Lq()) *
                     1.25 / a_;

    const std::size_t d = static_cast<std::size_t>(dom_.dim);
    auto pts = dom_.quasi_random_points(2 * pair_count, 512);
    double emp = 0.0;
    for (std::size_t i = 0; i < pair_count; ++i) {
        std::span<const double> x(pts.data() + (2 * i) * d, d);
        std::span<const double> y(pts.data() + (2 * i + 1) * d, d);
        double dist2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) dist2 += (x[k] - y[k]) * (x[k] - y[k]);
        double dist = std::sqrt(dist2);
        if (dist < 1e-12) continue;
        emp = std::max(emp, std::abs(eval_K(x) - eval_K(y)) / dist);
    }

    Rng rng(seed_mix(seed, 0x6c6970ULL));
    std::vector<double> y(d);
    for (double dist : {1e-2, 1e-3, 1e-4}) {
        double worst = 0.0;
        std::size_t trials = std::max<std::size_t>(8, pair_count / 4);
        std::size_t done = 0;
        auto base = dom_.quasi_random_points(trials, 1024 + static_cast<std::size_t>(-std::log10(dist)) * 4096);
        for (std::size_t i = 0; i < trials && done < trials; ++i) {
            std::span<const double> x(base.data() + i * d, d);
            double norm2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                y[k] = rng.normal();
                norm2 += y[k] * y[k];
            }
            double inv = dist / std::sqrt(std::max(norm2, 1e-30));
            for (std::size_t k = 0; k < d; ++k) y[k] = x[k] + y[k] * inv;
            if (!dom_.contains(y)) continue;
            worst = std::max(worst, std::abs(eval_K(x) - eval_K(y)) / dist);
            ++done;
        }
        lr.by_distance.emplace_back(dist, worst);
        emp = std::max(emp, worst);
    }
    lr.empirical = emp;
    return lr;
}

nlohmann::json Approximant::derived_json() const {
    nlohmann::json j;
    j["a"] = a_;
    j["b"] = b_;
    j["eps_internal"] = eps_;
    j["eps_user"] = eps_user_;
    j["delta"] = std::isfinite(delta_) ? nlohmann::json(delta_) : nlohmann::json("inf");
    j["flat_target"] = flat_;
    j["gammas"] = {net_.gammas.g1, net_.gammas.g2, net_.gammas.g3};
    j["net_count"] = net_.count;
    j["net_spacing"] = net_.spacing;
    j["cover_radius"] = net_.cover_radius;
    j["K1"] = q_.K1();
    j["M"] = q_.M();
    j["Lq"] = q_.Lq();
    j["eta"] = q_.eta();
    j["q_scale"] = q_.scale();
    j["Lb"] = fam_.bump().lb();
    j["W1"] = w1_;  // recorded only; zeta2 is certified on [0, 1.05]
    j["T"] = gates_.T;
    j["L_zeta1"] = gates_.L_zeta1;
    j["L2"] = gates_.L2;
    j["L_h"] = gates_.L_h;
    auto margins = [](const MarginReport& r) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& e : r.entries) out.push_back({{"constraint", e.constraint}, {"margin", e.margin}, {"at", e.at}});
        return out;
    };
    j["gate_margins"] = {{"zeta1", margins(gates_.rep1)}, {"zeta2", margins(gates_.rep2)}, {"h", margins(gates_.reph)}};
    // kappa schedule (decimated when large)
    nlohmann::json lk = nlohmann::json::array();
    std::size_t N = net_.count;
    std::size_t stride = N <= 4096 ? 1 : N / 512;
    for (std::size_t n = 1; n <= N; n += stride) lk.push_back({{"n", n}, {"log_kappa", fam_.log_kappa(n)}});
    if ((N - 1) % stride != 0) lk.push_back({{"n", N}, {"log_kappa", fam_.log_kappa(N)}});
    j["log_kappa"] = lk;
    return j;
}

}  // namespace gapx
