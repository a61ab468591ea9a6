#include "gapx/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gapx/mollifier.hpp"
#include "gapx/numeric.hpp"
#include "gapx/rng.hpp"

namespace gapx::verify {

namespace {

struct Meter {
    PropertyResult r;
    explicit Meter(std::string name) { r.name = std::move(name); r.worst_margin = std::numeric_limits<double>::infinity(); }
    void check(double margin, const std::string& note = {}) {
        ++r.checked;
        if (margin < r.worst_margin) {
            r.worst_margin = margin;
            if (!note.empty()) r.note = note;
        }
        if (margin < 0.0) ++r.violations;
    }
};

std::string at_point(std::span<const double> x) {
    std::string s = "x=(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(x[i]);
    }
    return s + ")";
}

double dist_euclid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

// z with normal_upper_tail(z) = p, by bisection.
double upper_tail_inverse(double p) {
    double lo = 0.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (normal_upper_tail(mid) > p ? lo : hi) = mid;
    }
    return hi;
}

std::vector<double> q_coords(const Approximant& ap, std::span<const double> x, std::size_t n) {
    std::vector<double> coords(n), diff(x.size());
    for (std::size_t j = 0; j < n; ++j) {
        auto xj = ap.net().point(j);
        for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - xj[i];
        coords[j] = ap.q()(diff);
    }
    return coords;
}

}  // namespace

nlohmann::json PropertyResult::to_json() const {
    return {{"name", name},
            {"checked", checked},
            {"violations", violations},
            {"worst_margin", std::isfinite(worst_margin) ? worst_margin : 0.0},
            {"note", note},
            {"pass", pass()}};
}

bool all_pass(const std::vector<PropertyResult>& results) {
    for (const auto& r : results)
        if (!r.pass()) return false;
    return true;
}

std::vector<PropertyResult> gauge_battery(std::size_t n_vectors, std::uint64_t seed, const GaugeConfig& cfg) {
    Meter sandwich_lo("gauge sandwich: lambda >= sup-norm");
    Meter sandwich_hi("gauge sandwich: lambda <= 2 sup-norm");
    Meter homogeneity("gauge homogeneity: lambda(a x) = |a| lambda(x)");
    Meter subadd("gauge subadditivity");
    Meter lip("gauge 1-Lipschitz");
    Meter bracket("gauge bracket residual monotone: C >= 1 left, <= 1 right");
    Meter oracle("gauge vs bisection oracle");
    Meter closed("gauge closed form at (1,1)");

    Rng rng(seed);
    const double tol = 1e-8;
    std::vector<double> x, y, xy, diff, ax;
    for (std::size_t i = 0; i < n_vectors; ++i) {
        std::size_t len = 1 + rng.next_u64() % 50;
        x.resize(len);
        y.resize(len);
        double m = 0.0;
        for (auto& v : x) {
            v = rng.uniform(-2.0, 2.0);
            m = std::max(m, std::abs(v));
        }
        if (m == 0.0) {
            x[0] = 1.0;
            m = 1.0;
        }
        for (auto& v : y) v = rng.uniform(-2.0, 2.0);

        double lam = gauge_lambda(x, cfg);
        sandwich_lo.check(lam - m + tol);
        sandwich_hi.check(2.0 * m - lam + tol);

        double a = rng.uniform(0.25, 2.0) * (rng.next_u64() & 1 ? 1.0 : -1.0);
        ax.resize(len);
        for (std::size_t k = 0; k < len; ++k) ax[k] = a * x[k];
        double lam_ax = gauge_lambda(ax, cfg);
        homogeneity.check(10.0 * cfg.tol + tol * std::max(1.0, std::abs(a) * lam) -
                          std::abs(lam_ax - std::abs(a) * lam));

        double lam_y = gauge_lambda(y, cfg);
        xy.resize(len);
        diff.resize(len);
        double max_diff = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
            xy[k] = x[k] + y[k];
            diff[k] = x[k] - y[k];
            max_diff = std::max(max_diff, std::abs(diff[k]));
        }
        double lam_xy = gauge_lambda(xy, cfg);
        subadd.check(lam + lam_y + tol - lam_xy);
        if (max_diff > 1e-12) {
            double lam_diff = gauge_lambda(diff, cfg);
            lip.check(lam_diff + tol - std::abs(lam - lam_y));
        }

        // endpoint residuals of the root bracket
        std::vector<double> scaled(len);
        for (std::size_t k = 0; k < len; ++k) scaled[k] = x[k] / m;
        bracket.check(series_C(scaled) - 1.0 + 1e-12);
        for (std::size_t k = 0; k < len; ++k) scaled[k] = x[k] / (2.0 * m);
        bracket.check(1.0 - series_C(scaled));

        if (i % std::max<std::size_t>(1, n_vectors / 128) == 0)
            oracle.check(1e-9 - std::abs(lam - lambda_oracle(x)));
    }

    const double ones[2] = {1.0, 1.0};
    double lam11 = gauge_lambda(std::span<const double>(ones, 2), cfg);
    // closed form sqrt((1 + sqrt 5)/2)
    closed.check(1e-6 - std::abs(lam11 - 1.2720196495140689642), "lambda((1,1))");
    closed.check(1e-6 - std::abs(lam11 - lambda_oracle(std::span<const double>(ones, 2))), "vs oracle");

    return {sandwich_lo.r, sandwich_hi.r, homogeneity.r, subadd.r, lip.r, bracket.r, oracle.r, closed.r};
}

std::vector<PropertyResult> lemma2_battery(const SepPolyQ& q, double R, std::size_t n_samples,
                                           std::uint64_t seed) {
    Meter nonneg("q nonnegative and even");
    Meter lower("q lower bound: ||y||^2n <= q(y) when q(y) < 1");
    Meter upper("q upper bound: q(y) <= K1 max(||y||, ||y||^2n)");
    Meter lipschitz("q Lipschitz on the 2R ball");

    Rng rng(seed);
    const int d = q.dim();
    std::vector<double> y(static_cast<std::size_t>(d)), ny(static_cast<std::size_t>(d)), y2(static_cast<std::size_t>(d));
    auto sample_ball = [&](std::vector<double>& out, double rmax, double bias) {
        double norm2 = 0.0;
        for (auto& v : out) {
            v = rng.normal();
            norm2 += v * v;
        }
        double r = rmax * std::pow(rng.uniform(), bias);
        double f = r / std::sqrt(std::max(norm2, 1e-300));
        for (auto& v : out) v *= f;
    };

    for (std::size_t i = 0; i < n_samples; ++i) {
        // biased toward small radii so the q < 1 branch is exercised often
        sample_ball(y, 2.0 * R, i % 2 ? 2.0 : 0.5);
        double qv = q(y);
        for (std::size_t k = 0; k < y.size(); ++k) ny[k] = -y[k];
        double qn = q(ny);
        nonneg.check(qv >= 0.0 ? std::abs(qv - qn) <= 1e-12 * std::max(1.0, qv) ? 1.0 : -1.0 : -1.0,
                     at_point(y));

        auto diag = q.check_bounds(y);
        if (diag.lower_checked) lower.check(diag.q_value + 1e-12 - diag.norm_pow_2n, at_point(y));
        double nrm = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
        upper.check(q.K1() * std::max(nrm, diag.norm_pow_2n) * (1.0 + 1e-12) + 1e-300 - diag.q_value,
                    at_point(y));
    }
    std::size_t pairs = std::min<std::size_t>(n_samples, 10000);
    for (std::size_t i = 0; i < pairs; ++i) {
        sample_ball(y, 2.0 * R, 1.0);
        sample_ball(y2, 2.0 * R, 1.0);
        double dd = dist_euclid(y, y2);
        lipschitz.check(q.Lq() * dd * (1.0 + 1e-9) + 1e-12 - std::abs(q(y) - q(y2)));
    }
    return {nonneg.r, lower.r, upper.r, lipschitz.r};
}

std::vector<PropertyResult> lemma3_battery(const Approximant& ap, std::size_t ul_pairs,
                                           std::size_t backend_checks, std::size_t emergence_points,
                                           std::uint64_t seed) {
    Meter range("phi range [0, 1]");
    Meter emergence("phi emergence: first level-2 index gives phi > 1/2");
    Meter ul("phi uniform Lipschitz: |dphi| <= Lb Lq |dx|");
    Meter backend("nu backends agree within 3 standard errors");
    Meter localization("phi localization: phi_n < 0.01 past a covered index");

    const auto& net = ap.net();
    const auto& fam = ap.family();
    const double g1 = net.gammas.g1, g2 = net.gammas.g2;
    const double lb_lq = fam.bump().lb() * ap.q().Lq();
    Rng rng(seed);
    NuOptions opts;
    opts.quad_tol = ap.config().quad_tol;
    opts.mc_samples = ap.config().mc_samples;

    // emergence via the sweep (also exercises the phi range over every n)
    auto pts = ap.domain().quasi_random_points(emergence_points, 8192);
    const std::size_t d = static_cast<std::size_t>(ap.domain().dim);
    for (std::size_t i = 0; i < emergence_points; ++i) {
        std::span<const double> x(pts.data() + i * d, d);
        auto sv = ap.sweep_vectors(x);
        double phi_min = 0.0, phi_max = 0.0;
        std::size_t first_c2 = 0;
        for (std::size_t c = 0; c < net.count; ++c) {
            phi_min = std::min(phi_min, sv.phi[c + 1]);
            phi_max = std::max(phi_max, sv.phi[c + 1]);
            if (!first_c2 && sv.dq[c] < g2) first_c2 = c + 1;
        }
        range.check(std::min(phi_min + 1e-12, 1.0 + 1e-12 - phi_max), at_point(x));
        if (first_c2) emergence.check(sv.phi[first_c2 - 1] - 0.5, at_point(x));
        else emergence.check(-1.0, at_point(x));
    }

    // uniform Lipschitz over random (x, x', n)
    auto pair_pts = ap.domain().quasi_random_points(2 * ul_pairs, 65536);
    for (std::size_t i = 0; i < ul_pairs; ++i) {
        std::span<const double> x(pair_pts.data() + (2 * i) * d, d);
        std::span<const double> xp(pair_pts.data() + (2 * i + 1) * d, d);
        std::size_t n = 1 + rng.next_u64() % net.count;
        opts.seed_key = seed_mix(seed, i, 0x756cULL);
        double a = phi_n(fam, ap.q(), net, x, n, NuBackend::layercake, opts);
        double b = phi_n(fam, ap.q(), net, xp, n, NuBackend::layercake, opts);
        ul.check(lb_lq * dist_euclid(x, xp) + 1e-7 - std::abs(a - b));
    }

    // backend cross-check on random (n, x)
    auto bc_pts = ap.domain().quasi_random_points(backend_checks, 131072);
    for (std::size_t i = 0; i < backend_checks; ++i) {
        std::span<const double> x(bc_pts.data() + i * d, d);
        std::size_t n = 1 + rng.next_u64() % net.count;
        auto coords = q_coords(ap, x, n);
        opts.seed_key = seed_mix(seed, i, 0x6263ULL);
        auto cc = nu_cross_check(fam, coords, opts);
        backend.check(3.0 * cc.montecarlo.err + 1e-9 - std::abs(cc.layercake.value - cc.montecarlo.value),
                      at_point(x));
    }

    // localization: past a covered index, phi stays below eta = 0.01 for every
    // real perturbation within the computed radius
    {
        const double z_eta = upper_tail_inverse(0.01);  // ~2.33
        const double sigma_cap = g1 / 5.0;              // schedule clause
        std::size_t pts_n = std::min<std::size_t>(emergence_points, 16);
        std::vector<double> xz(d);
        for (std::size_t i = 0; i < pts_n; ++i) {
            std::span<const double> x(pts.data() + i * d, d);
            auto coords = q_coords(ap, x, net.count);
            std::size_t j0 = 0;
            double dq0 = 0.0;
            for (std::size_t c = 0; c < net.count; ++c)
                if (coords[c] < g1) {
                    j0 = c + 1;
                    dq0 = coords[c];
                    break;
                }
            if (!j0) {
                localization.check(-1.0, "no C^1 index (cover bug) " + at_point(x));
                continue;
            }
            double rho = (2.0 * g1 - dq0 - z_eta * sigma_cap * 1.02) / ap.q().Lq();
            if (rho <= 0.0) continue;
            std::size_t n_list[4] = {j0 + 1, j0 + 3, std::min(j0 + 17, net.count), net.count};
            for (int zi = 0; zi < 4; ++zi) {
                for (double& v : xz) v = rng.normal();
                double nz = std::sqrt(std::inner_product(xz.begin(), xz.end(), xz.begin(), 0.0));
                double rad = rho * (zi == 0 ? 0.25 : 0.999) / std::max(nz, 1e-300);
                for (std::size_t kk = 0; kk < d; ++kk) xz[kk] = x[kk] + xz[kk] * rad;
                for (std::size_t nn : n_list) {
                    if (nn <= j0 || nn > net.count) continue;
                    double v = phi_n(fam, ap.q(), net, xz, nn, NuBackend::layercake, opts);
                    localization.check(0.01 - v, at_point(x));
                }
            }
        }
    }

    return {range.r, emergence.r, ul.r, backend.r, localization.r};
}

std::vector<PropertyResult> lemma4_battery(const Approximant& ap, std::size_t points, std::uint64_t seed) {
    Meter off_psi("psi off-support: psi_j >= 1 for x outside C_j^3");
    Meter first_psi("psi at the first level-2 index < 1/2");
    Meter off_u("u off-support: u_j < eps/4 for j outside J");
    Meter u_range("u range: 0 < u_j <= 1; max u >= 4/5");
    Meter scaled("scaled {a u_j} admissible: sandwich at a = 15/8");
    Meter psi_ul("psi uniform Lipschitz");
    Meter u_ul("u uniform Lipschitz");
    Meter stability("psi stability: psi_j > 1 and small drift past the cover index");

    const auto& net = ap.net();
    const double eps = ap.eps_internal();
    const std::size_t d = static_cast<std::size_t>(ap.domain().dim);
    Rng rng(seed);

    auto pts = ap.domain().quasi_random_points(points, 4096);
    auto rep = ap.error_report(pts, points);
    for (std::size_t i = 0; i < points; ++i) {
        const auto& pe = rep.points[i];
        std::span<const double> x(pts.data() + i * d, d);
        off_psi.check(pe.min_psi_offC3 - 1.0, at_point(x));
        first_psi.check(0.5 - pe.psi_first_c2, at_point(x));
        off_u.check(0.25 * eps - pe.max_offJ_u, at_point(x));
        u_range.check(std::min(pe.max_u - 0.8, 1.0 - pe.max_u + 1e-12), at_point(x));
        scaled.check(std::min(pe.sandwich_lo_gap, pe.sandwich_hi_gap) + 1e-8, at_point(x));
    }

    // uniform Lipschitz of the psi and u families
    const auto& gs = ap.gates();
    double psi_const = gs.L_zeta1 * ap.q().Lq() + gs.L2 * ap.family().bump().lb() * ap.q().Lq();
    std::size_t pairs = std::min<std::size_t>(points, 2000);
    auto pair_pts = ap.domain().quasi_random_points(2 * pairs, 262144);
    NuOptions opts;
    opts.quad_tol = ap.config().quad_tol;
    for (std::size_t i = 0; i < pairs; ++i) {
        std::span<const double> x(pair_pts.data() + (2 * i) * d, d);
        std::span<const double> xp(pair_pts.data() + (2 * i + 1) * d, d);
        std::size_t j = 1 + rng.next_u64() % net.count;
        double pa = psi_j(gs, ap.q(), net, ap.family(), x, j, NuBackend::layercake, opts);
        double pb = psi_j(gs, ap.q(), net, ap.family(), xp, j, NuBackend::layercake, opts);
        double dd = dist_euclid(x, xp);
        psi_ul.check(psi_const * dd + 1e-7 - std::abs(pa - pb));
        u_ul.check(gs.L_h * psi_const * dd + 1e-7 - std::abs(gs.u_of_psi(pa) - gs.u_of_psi(pb)));
    }

    // real stability analogue past the first covered index
    {
        const double g1 = net.gammas.g1;
        const double eta_p = 1.0 / (40.0 * gs.L2 * gs.L_h);
        const double z_eta = upper_tail_inverse(std::min(0.25, eta_p));
        std::size_t pts_n = std::min<std::size_t>(points, 8);
        std::vector<double> xz(d);
        for (std::size_t i = 0; i < pts_n; ++i) {
            std::span<const double> x(pts.data() + i * d, d);
            auto coords = q_coords(ap, x, net.count);
            std::size_t jx = 0;
            double dq0 = 0.0;
            for (std::size_t c = 0; c < net.count; ++c)
                if (coords[c] < g1) {
                    jx = c + 1;
                    dq0 = coords[c];
                    break;
                }
            if (!jx) continue;
            double rho_g = (2.0 * g1 - dq0 - z_eta * (g1 / 5.0) * 1.02) / ap.q().Lq();
            double rho_f = 1.0 / (20.0 * gs.L_h * std::max(gs.L_zeta1, 1.0) * ap.q().Lq());
            double rho = 0.99 * std::min(rho_g, rho_f);
            if (rho <= 0.0) continue;
            for (double& v : xz) v = rng.normal();
            double nz = std::sqrt(std::inner_product(xz.begin(), xz.end(), xz.begin(), 0.0));
            for (std::size_t kk = 0; kk < d; ++kk) xz[kk] = x[kk] + xz[kk] * rho / std::max(nz, 1e-300);
            std::size_t j_list[3] = {jx + 2, std::min(jx + 10, net.count), net.count};
            for (std::size_t j : j_list) {
                if (j <= jx + 1 || j > net.count) continue;
                double pj = psi_j(gs, ap.q(), net, ap.family(), x, j, NuBackend::layercake, opts);
                double pjz = psi_j(gs, ap.q(), net, ap.family(), xz, j, NuBackend::layercake, opts);
                stability.check(std::min(pj - 1.0, 1.0 / (10.0 * gs.L_h) - std::abs(pjz - pj)),
                                at_point(x));
            }
        }
    }

    return {off_psi.r, first_psi.r, off_u.r, u_range.r, scaled.r, psi_ul.r, u_ul.r, stability.r};
}

std::vector<PropertyResult> theorem1_battery(const Approximant& ap, std::size_t points, std::uint64_t seed) {
    Meter sup_err("theorem: sup |K - F| < eps");
    Meter den("denominator floor: lambda(u) >= 4/5");
    Meter modulus("J branch: |F_norm(x_j) - F_norm(x)| < eps/2 on J");
    Meter transfer("gauge 1-Lipschitz transfer (3.5)");
    Meter sandwich("gauge sandwich transfer (3.6)");
    Meter range("K range within [inf F - eps, sup F + eps]");
    (void)seed;

    auto pts = ap.domain().quasi_random_points(points, 16384);
    auto rep = ap.error_report(pts, points);
    sup_err.check(ap.eps_user() - rep.sup_err);
    sup_err.r.checked = points;
    den.check(rep.min_den - (0.8 - 1e-6));
    den.r.checked = points;
    modulus.check(0.5 * ap.eps_internal() - rep.max_J_dF);
    modulus.r.checked = points;
    transfer.check(rep.worst_lip_gap + 1e-8);
    transfer.r.checked = points;
    sandwich.check(rep.worst_sw_gap + 1e-8);
    sandwich.r.checked = points;
    range.check(rep.range_ok ? 1.0 : -1.0);
    range.r.checked = points;

    return {sup_err.r, den.r, modulus.r, transfer.r, sandwich.r, range.r};
}

}  // namespace gapx::verify
