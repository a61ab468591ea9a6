#include "gapx/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gapx/numeric.hpp"

namespace gapx {

namespace {

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

// C(x/mu) over the kept terms and its mu-derivative, Kahan-summed.
struct Residual {
    double c;       // C(x/mu)
    double dc_dmu;  // d/dmu C(x/mu), negative
};

Residual eval_residual(std::span<const GaugeTerm> terms, double mu) {
    KahanSum s, sd;
    for (const auto& t : terms) {
        double p = pow_int(std::abs(t.value) / mu, t.exponent);
        s.add(p);
        sd.add(static_cast<double>(t.exponent) * p);
    }
    return {s.sum, -sd.sum / mu};
}

}  // namespace

double series_C(std::span<const double> x) {
    std::vector<double> terms;
    terms.reserve(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
        double p = pow_int(x[c], 2u * static_cast<unsigned>(c + 1));
        if (!std::isfinite(p)) throw std::overflow_error("series_C: term x_j^{2j} overflowed");
        terms.push_back(p);
    }
    std::sort(terms.begin(), terms.end(), std::greater<double>());
    KahanSum s;
    for (double t : terms) s.add(t);
    return s.sum;
}

double gauge_lambda_terms(std::span<const GaugeTerm> terms, double m, double tail_bound, const GaugeConfig& cfg) {
    if (m <= 0.0) throw std::invalid_argument("gauge: zero vector has no gauge value");
    if (m >= cfg.max_abs_entry) throw std::invalid_argument("gauge: entry magnitude beyond accepted range");
    if (tail_bound > 0.25 * cfg.tol) throw std::invalid_argument("gauge: pruning tail bound too large");

    double lo = m, hi = 2.0 * m;
    // Bracket sanity (C is strictly decreasing in mu): C(m) >= 1, C(2m) <= 1.
    if (eval_residual(terms, lo).c < 1.0 - 1e-9) throw std::logic_error("gauge: bracket failure at left endpoint");
    if (eval_residual(terms, hi).c + tail_bound > 1.0) throw std::logic_error("gauge: bracket failure at right endpoint");

    // Bisection to a narrow interval.
    while (hi - lo > 1e-6 * m) {
        double mid = 0.5 * (lo + hi);
        (eval_residual(terms, mid).c > 1.0 ? lo : hi) = mid;
    }

    // Newton polish; the bracket is kept as a safety rail.
    double mu = 0.5 * (lo + hi);
    const double resid_target = std::min(cfg.tol, 1e-14);
    for (int it = 0; it < cfg.max_iter; ++it) {
        Residual r = eval_residual(terms, mu);
        double f = r.c - 1.0;
        if (std::abs(f) <= resid_target) break;
        (f > 0.0 ? lo : hi) = mu;
        double step = f / r.dc_dmu;
        double next = mu - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - mu) <= std::numeric_limits<double>::epsilon() * mu) {
            mu = next;
            break;
        }
        mu = next;
    }
    return mu;
}

double gauge_lambda(std::span<const double> x, const GaugeConfig& cfg) {
    if (x.empty()) throw std::invalid_argument("gauge: empty vector");
    double m = max_abs(x);
    if (m == 0.0) throw std::invalid_argument("gauge: zero vector has no gauge value");
    if (m >= cfg.max_abs_entry) throw std::invalid_argument("gauge: entry magnitude beyond accepted range");

    // Keep only terms that can contribute more than tau at any mu in the
    // bracket (mu >= m); the rest are covered by an additive tail bound.
    // thresholds[k] = tau^{1/(2k)}: a term at position j=k+1 with
    // |x|/m below it satisfies (|x|/m)^{2j} <= tau for every mu >= m.
    constexpr double kLogTau = -50.657;  // ln(1e-22)
    constexpr int kThreshCount = 256;
    static const std::vector<double> thresholds = [] {
        std::vector<double> t(kThreshCount + 1, 0.0);
        for (int k = 1; k <= kThreshCount; ++k) t[static_cast<std::size_t>(k)] = std::exp(kLogTau / (2.0 * k));
        return t;
    }();
    std::vector<GaugeTerm> terms;
    terms.reserve(std::min<std::size_t>(x.size(), 64));
    std::size_t dropped = 0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        double a = std::abs(x[c]);
        if (a == 0.0) continue;
        int k = static_cast<int>(std::min<std::size_t>(c + 1, kThreshCount));
        if (a <= m * thresholds[static_cast<std::size_t>(k)]) {
            ++dropped;
            continue;
        }
        terms.push_back({x[c], 2u * static_cast<unsigned>(c + 1)});
    }
    std::sort(terms.begin(), terms.end(),
              [m](const GaugeTerm& u, const GaugeTerm& v) {
                  return static_cast<double>(u.exponent) * std::log(std::abs(u.value) / m) >
                         static_cast<double>(v.exponent) * std::log(std::abs(v.value) / m);
              });
    double tail = static_cast<double>(dropped) * 1e-22;
    return gauge_lambda_terms(terms, m, tail, cfg);
}

double lambda_oracle(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("gauge: empty vector");
    double m = max_abs(x);
    if (m == 0.0) throw std::invalid_argument("gauge: zero vector has no gauge value");
    double lo = m, hi = 2.0 * m;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double c = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            c += pow_int(std::abs(x[j]) / mid, 2u * static_cast<unsigned>(j + 1));
        (c > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace gapx
