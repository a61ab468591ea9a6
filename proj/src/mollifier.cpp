#include "gapx/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "gapx/errors.hpp"
#include "gapx/numeric.hpp"
#include "gapx/rng.hpp"

namespace gapx {

namespace {

// A coordinate whose Gaussian sits z_skip sigmas inside a flat region of b
// contributes an identically-1 or identically-0 factor up to
// normal_upper_tail(16) ~ 6.4e-58 per coordinate.
constexpr double kZSkip = 16.0;
// Influence-zone halfwidth used for quadrature breakpoints.
constexpr double kZBreak = 40.0;
// Target for the sup-norm tail quantity (the requirement is < 1/2).
constexpr double kTailTarget = 0.05;
// Localization clause: sigma_j(kappa_n) <= gamma1/5 for every j < n, so that
// a covered coordinate forces phi_n below 1% a single index later.
constexpr double kLocDivisor = 5.0;

enum class CoordClass { one, dead, active };

struct ActiveCoord {
    double dq;
    double sigma;
};

CoordClass classify(const BumpSpec& b, double dq, double sigma) {
    const double lo1 = 2.0 * b.gamma1, lo0 = 3.0 * b.gamma1;
    const double hi0 = b.M + 1.0, hi1 = b.M + 2.0;
    const double guard = kZSkip * sigma;
    if (lo1 - dq >= guard || dq - hi1 >= guard) return CoordClass::dead;
    if (dq - lo0 >= guard && hi0 - dq >= guard) return CoordClass::one;
    return CoordClass::active;
}

thread_local boost::math::quadrature::tanh_sinh<double> g_quad(12);

// Integral over [0,1] of prod_c P(Y_c in {b < s}) via piecewise tanh-sinh.
NuResult layercake(const BumpSpec& bump, std::span<const ActiveCoord> active, double tol) {
    const double g1 = bump.gamma1;
    const double hi_base = bump.M + 1.0;

    std::vector<double> cuts{0.0, 1.0};
    for (const auto& a : active) {
        // s-interval where this coordinate's factor can vary, per ramp
        double w = kZBreak * a.sigma;
        double glo = std::clamp((a.dq - w - 2.0 * g1) / g1, 0.0, 1.0);
        double ghi = std::clamp((a.dq + w - 2.0 * g1) / g1, 0.0, 1.0);
        if (glo < 1.0 && ghi > 0.0) {
            cuts.push_back(1.0 - smoothstep(ghi));
            cuts.push_back(1.0 - smoothstep(glo));
            double mid = std::clamp((a.dq - 2.0 * g1) / g1, 0.0, 1.0);
            cuts.push_back(1.0 - smoothstep(mid));
        }
        double rlo = std::clamp(a.dq - w - hi_base, 0.0, 1.0);
        double rhi = std::clamp(a.dq + w - hi_base, 0.0, 1.0);
        if (rlo < 1.0 && rhi > 0.0) {
            cuts.push_back(smoothstep(rlo));
            cuts.push_back(smoothstep(rhi));
            cuts.push_back(smoothstep(std::clamp(a.dq - hi_base, 0.0, 1.0)));
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double u, double v) { return v - u < 1e-13; }),
               cuts.end());
    if (cuts.back() < 1.0) cuts.push_back(1.0);

    auto integrand = [&](double s) {
        double blo = bump.level_lo(s);
        double bhi = bump.level_hi(s);
        double p = 1.0;
        for (const auto& a : active) {
            double f;
            if (a.sigma > 0.0) {
                f = normal_interval_mass((blo - a.dq) / a.sigma, (bhi - a.dq) / a.sigma);
            } else {
                f = (a.dq > blo && a.dq < bhi) ? 1.0 : (a.dq == blo || a.dq == bhi) ? 0.5 : 0.0;
            }
            p *= f;
            if (p < 1e-300) return 0.0;
        }
        return p;
    };

    NuResult r{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        if (b - a < 1e-15) {
            r.value += integrand(0.5 * (a + b)) * (b - a);
            continue;
        }
        double err = 0.0, l1 = 0.0;
        double piece = g_quad.integrate(integrand, a, b, tol, &err, &l1);
        r.value += piece;
        r.err += std::abs(err);
    }
    r.value = std::clamp(r.value, 0.0, 1.0);
    return r;
}

NuResult montecarlo(const BumpSpec& bump, std::span<const ActiveCoord> active, int samples, std::uint64_t seed) {
    Rng rng(seed);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        double v = 1.0;
        for (const auto& a : active) {
            double y = a.dq + a.sigma * rng.normal();
            v = std::min(v, 1.0 - bump(y));
            if (v == 0.0) break;
        }
        sum += v;
        sum2 += v * v;
    }
    double mean = sum / samples;
    double var = std::max(0.0, (sum2 - samples * mean * mean) / std::max(1, samples - 1));
    return {mean, std::sqrt(var / samples)};
}

}  // namespace

double BumpSpec::operator()(double t) const {
    const double lo1 = 2.0 * gamma1, lo0 = 3.0 * gamma1;
    const double hi0 = M + 1.0, hi1 = M + 2.0;
    if (t <= lo1 || t >= hi1) return 1.0;
    if (t < lo0) return 1.0 - smoothstep((t - lo1) / gamma1);
    if (t <= hi0) return 0.0;
    return smoothstep(t - hi0);
}

double BumpSpec::level_lo(double s) const { return 2.0 * gamma1 + gamma1 * smoothstep_inverse(1.0 - s); }

double BumpSpec::level_hi(double s) const { return M + 1.0 + smoothstep_inverse(s); }

double bump_bn(const BumpSpec& bump, std::span<const double> y) {
    double worst = 0.0;
    for (double v : y) worst = std::max(worst, bump(v));
    return 1.0 - worst;
}

void BumpSpec::validate() const {
    if (!(gamma1 > 0.0)) throw ConfigError("bump: gamma1 must be positive");
    if (!(M >= 1.0)) throw ConfigError("bump: M must be at least 1");
    if (!(3.0 * gamma1 < M + 1.0)) throw ConfigError("bump: transition intervals overlap");
}

MollifierFamily::MollifierFamily(BumpSpec bump, double gamma2, std::size_t n_max)
    : bump_(bump), gamma2_(gamma2), n_max_(n_max) {
    bump_.validate();
    if (!(gamma2 > 0.0)) throw ConfigError("mollifier: gamma2 must be positive");
    if (n_max == 0) throw ConfigError("mollifier: need at least one coordinate");

    const double log_side = std::log(bump_.M + 2.0 - 2.0 * bump_.gamma1);
    const double log_loc = -2.0 * std::log(bump_.gamma1 / kLocDivisor);
    log_kappa_.resize(n_max);

    // tail quantity as a function of log kappa, summed over the few weakest
    // coordinates (the rest have erf arguments beyond 30 and contribute 0)
    auto tail_at = [&](std::size_t n, double lk) {
        const double log_num = std::log(gamma2_ / (2.0 * kSqrt2));
        double sum_log = 0.0;
        for (std::size_t j = n; j >= 1; --j) {
            double lsig = (static_cast<double>(j - 1) * kLn2 - lk) * 0.5;
            double lz = log_num - lsig;
            if (lz > 3.4) break;  // z > 30: erf(z) = 1 to double precision
            sum_log += log_erf(std::exp(lz));
        }
        return -std::expm1(sum_log);
    };

    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n <= n_max; ++n) {
        double lk = std::max(prev, (4.0 / n) * std::lgamma(static_cast<double>(n) + 1.0) + kLnPi +
                                       (static_cast<double>(n) + 1.0) * 0.5 * kLn2 - 2.0 * log_side);
        if (n >= 2) lk = std::max(lk, static_cast<double>(n - 2) * kLn2 + log_loc);
        if (tail_at(n, lk) > kTailTarget) {
            double lo = lk, hi = lk;
            int guard = 0;
            do {
                hi += kLn2;  // doubling search in kappa
            } while (tail_at(n, hi) > kTailTarget && ++guard < 4000);
            if (guard >= 4000) throw std::overflow_error("mollifier: tail condition unattainable");
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                (tail_at(n, mid) > kTailTarget ? lo : hi) = mid;
            }
            lk = hi;
        }
        log_kappa_[n - 1] = lk;
        prev = lk;
    }
}

double MollifierFamily::log_sigma(std::size_t j, std::size_t n) const {
    return (static_cast<double>(j - 1) * kLn2 - log_kappa(n)) * 0.5;
}

double MollifierFamily::log_T_hat(std::size_t n) const {
    double nd = static_cast<double>(n);
    return 0.5 * nd * kLnPi + nd * (nd + 1.0) * 0.25 * kLn2;
}

double MollifierFamily::log_T(std::size_t n) const {
    return log_T_hat(n) - 0.5 * static_cast<double>(n) * log_kappa(n);
}

double MollifierFamily::log_vol_A(std::size_t n) const {
    return static_cast<double>(n) * std::log(bump_.M + 2.0 - 2.0 * bump_.gamma1);
}

double MollifierFamily::tail_quantity(std::size_t n) const {
    const double log_num = std::log(gamma2_ / (2.0 * kSqrt2));
    double sum_log = 0.0;
    for (std::size_t j = n; j >= 1; --j) {
        double lz = log_num - log_sigma(j, n);
        if (lz > 3.4) break;
        sum_log += log_erf(std::exp(lz));
    }
    return -std::expm1(sum_log);
}

bool MollifierFamily::schedule_ok(std::size_t n) const {
    double lk = log_kappa(n);
    double fact = (4.0 / n) * std::lgamma(static_cast<double>(n) + 1.0) + kLnPi +
                  (static_cast<double>(n) + 1.0) * 0.5 * kLn2 -
                  2.0 * std::log(bump_.M + 2.0 - 2.0 * bump_.gamma1);
    if (lk < fact - 1e-9) return false;
    if (n >= 2 && log_sigma(n - 1, n) > std::log(bump_.gamma1 / kLocDivisor) + 1e-12) return false;
    if (!(tail_quantity(n) < 0.5)) return false;
    if (n >= 2 && lk < log_kappa(n - 1) - 1e-12) return false;
    return true;
}

NuResult MollifierFamily::nu(std::span<const double> coords, NuBackend backend, const NuOptions& opts) const {
    const std::size_t n = coords.size();
    if (n == 0 || n > n_max_) throw std::invalid_argument("nu: coordinate count must be in [1, n_max]");

    std::vector<ActiveCoord> active;
    for (std::size_t c = 0; c < n; ++c) {
        double sigma = std::exp(log_sigma(c + 1, n));
        switch (classify(bump_, coords[c], sigma)) {
            case CoordClass::dead:
                return {0.0, 0.0};
            case CoordClass::one:
                break;
            case CoordClass::active:
                active.push_back({coords[c], sigma});
                break;
        }
    }
    if (active.empty()) return {1.0, 0.0};
    if (backend == NuBackend::layercake) return layercake(bump_, active, opts.quad_tol);
    return montecarlo(bump_, active, opts.mc_samples, seed_mix(opts.seed_key, n, 0x6e75ULL));
}

MollifierFamily::Sweep MollifierFamily::phi_sweep(std::span<const double> dq, NuBackend backend,
                                                  const NuOptions& opts) const {
    if (dq.size() != n_max_) throw std::invalid_argument("phi_sweep: expected one q-value per net point");
    const std::size_t N = n_max_;

    Sweep sw;
    sw.phi.assign(N + 1, 0.0);
    sw.phi[0] = 1.0;
    sw.n_zero = N + 1;

    // Coordinates that are not identically-1 at entry. exit_n is the first
    // level at which the coordinate is certified one (leaves the active set)
    // or certified dead (forces phi = 0 from then on). Both kinds of margin
    // only grow with n because kappa_n is nondecreasing.
    struct Tracked {
        std::size_t c;
        double dq;
        std::size_t exit_n;  // N+1 if never
        bool exit_dead;
        double ramp_width;  // of the transition band this coordinate can touch
    };
    std::vector<Tracked> near;
    const double lo1 = 2.0 * bump_.gamma1, lo0 = 3.0 * bump_.gamma1;
    const double hi0 = bump_.M + 1.0, hi1 = bump_.M + 2.0;

    auto first_n_with_margin = [&](std::size_t c, double margin) -> std::size_t {
        // smallest n >= c+1 with margin >= kZSkip * sigma_{c+1}(kappa_n)
        double threshold = static_cast<double>(c) * kLn2 + 2.0 * (std::log(kZSkip) - std::log(margin));
        auto it = std::lower_bound(log_kappa_.begin() + static_cast<std::ptrdiff_t>(c), log_kappa_.end(), threshold);
        if (it == log_kappa_.end()) return N + 1;
        return static_cast<std::size_t>(it - log_kappa_.begin()) + 1;
    };

    for (std::size_t c = 0; c < N; ++c) {
        double v = dq[c];
        double sigma_entry = std::exp(log_sigma(c + 1, c + 1));
        CoordClass entry = classify(bump_, v, sigma_entry);
        if (entry == CoordClass::one) continue;  // stays one for every n >= c+1
        Tracked t;
        t.c = c;
        t.dq = v;
        t.ramp_width = v < 0.5 * (lo0 + hi0) ? bump_.gamma1 : 1.0;
        if (lo1 - v > 0.0 || v - hi1 > 0.0) {
            t.exit_dead = true;
            t.exit_n = entry == CoordClass::dead ? c + 1 : first_n_with_margin(c, std::max(lo1 - v, v - hi1));
        } else if (v - lo0 > 0.0 && hi0 - v > 0.0) {
            t.exit_dead = false;
            t.exit_n = first_n_with_margin(c, std::min(v - lo0, hi0 - v));
        } else {
            t.exit_dead = false;
            t.exit_n = N + 1;  // pinned inside a transition band
        }
        near.push_back(t);
    }

    std::vector<ActiveCoord> active;
    std::vector<std::size_t> active_ids, cached_ids;
    double cached_value = -1.0;
    std::size_t next_entry = 0;

    for (std::size_t n = 1; n <= N; ++n) {
        // maintain the tracked window [first alive .. coords entered so far]
        while (next_entry < near.size() && near[next_entry].c + 1 <= n) ++next_entry;

        active.clear();
        active_ids.clear();
        bool frozen = true;
        for (std::size_t i = 0; i < next_entry; ++i) {
            const Tracked& t = near[i];
            if (n >= t.exit_n) {
                if (t.exit_dead) {
                    sw.n_zero = std::min(sw.n_zero, std::max(t.exit_n, t.c + 1));
                }
                continue;
            }
            double sigma = std::exp(log_sigma(t.c + 1, n));
            active.push_back({t.dq, sigma});
            active_ids.push_back(t.c);
            if (sigma > 1e-10 * t.ramp_width) frozen = false;
        }
        if (n >= sw.n_zero) break;

        if (active.empty()) {
            sw.phi[n] = 1.0;
            continue;
        }
        // Once every active sigma is far below its ramp width, the value is
        // within ~4e-9 of its sigma->0 limit; reuse it instead of re-integrating.
        if (frozen && active_ids == cached_ids && cached_value >= 0.0) {
            sw.phi[n] = cached_value;
            continue;
        }
        NuResult r = backend == NuBackend::layercake
                         ? layercake(bump_, active, opts.quad_tol)
                         : montecarlo(bump_, active, opts.mc_samples, seed_mix(opts.seed_key, n, 0x6e75ULL));
        ++sw.quad_evals;
        sw.max_err = std::max(sw.max_err, r.err);
        sw.phi[n] = r.value;
        if (frozen) {
            cached_ids = active_ids;
            cached_value = r.value;
        } else {
            cached_value = -1.0;
            cached_ids.clear();
        }
    }
    return sw;
}

double phi_n(const MollifierFamily& fam, const SepPolyQ& q, const Net& net, std::span<const double> x,
             std::size_t n, NuBackend backend, const NuOptions& opts) {
    if (n > net.count) throw std::invalid_argument("phi_n: n exceeds the net size");
    if (n == 0) return 1.0;
    std::vector<double> coords(n), diff(x.size());
    for (std::size_t j = 0; j < n; ++j) {
        auto xj = net.point(j);
        for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - xj[i];
        coords[j] = q(diff);
    }
    return fam.nu(coords, backend, opts).value;
}

NuCrossCheck nu_cross_check(const MollifierFamily& fam, std::span<const double> coords, const NuOptions& opts) {
    NuCrossCheck out;
    out.layercake = fam.nu(coords, NuBackend::layercake, opts);
    out.montecarlo = fam.nu(coords, NuBackend::montecarlo, opts);
    double gap = std::abs(out.layercake.value - out.montecarlo.value);
    out.consistent = gap <= 5.0 * out.montecarlo.err + 1e-9;
    return out;
}

}  // namespace gapx
