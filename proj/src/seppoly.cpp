#include "gapx/seppoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gapx/errors.hpp"
#include "gapx/numeric.hpp"
#include "gapx/rng.hpp"

namespace gapx {

namespace {

// Deterministic points on the unit sphere (fixed-seed Gaussian directions).
std::vector<double> sphere_points(int dim, std::size_t count) {
    Rng rng(0x5eed5eedULL);
    std::vector<double> pts(count * static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < count; ++i) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (int k = 0; k < dim; ++k) {
                double g = rng.normal();
                pts[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)] = g;
                norm2 += g * g;
            }
        } while (norm2 < 1e-12);
        double inv = 1.0 / std::sqrt(norm2);
        for (int k = 0; k < dim; ++k) pts[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)] *= inv;
    }
    return pts;
}

double norm2(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v * v;
    return s;
}

}  // namespace

double PComponent::eval(std::span<const double> y) const {
    double s = 0.0;
    for (const auto& t : terms) {
        double m = t.coeff;
        for (std::size_t i = 0; i < t.exps.size(); ++i)
            if (t.exps[i]) m *= pow_int(y[i], t.exps[i]);
        s += m;
    }
    return s;
}

void PComponent::grad(std::span<const double> y, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& t : terms) {
        for (std::size_t v = 0; v < t.exps.size(); ++v) {
            if (!t.exps[v]) continue;
            double m = t.coeff * t.exps[v] * pow_int(y[v], t.exps[v] - 1);
            for (std::size_t i = 0; i < t.exps.size(); ++i)
                if (i != v && t.exps[i]) m *= pow_int(y[i], t.exps[i]);
            out[v] += m;
        }
    }
}

SepPolyQ SepPolyQ::euclidean4(int dim) {
    if (dim < 1) throw ConfigError("seppoly: dimension must be >= 1");
    SepPolyQ q;
    q.kind_ = Kind::euclidean4;
    q.dim_ = dim;
    q.n_half_ = 2;
    q.scale_ = 1.0;
    q.eta_ = 1.0;  // exact: q = 1 on the Euclidean unit sphere
    PComponent p2;
    p2.degree = 2;
    for (int i = 0; i < dim; ++i) {
        MonomialTerm t;
        t.exps.assign(static_cast<std::size_t>(dim), 0u);
        t.exps[static_cast<std::size_t>(i)] = 2u;
        t.coeff = 1.0;
        p2.terms.push_back(std::move(t));
    }
    q.p_.push_back(std::move(p2));
    return q;
}

SepPolyQ SepPolyQ::quartic_sum(int dim) {
    if (dim < 1) throw ConfigError("seppoly: dimension must be >= 1");
    SepPolyQ q;
    q.kind_ = Kind::quartic_sum;
    q.dim_ = dim;
    q.n_half_ = 4;
    q.scale_ = static_cast<double>(dim) * dim;  // sphere min of (sum y^4)^2 is 1/d^2
    q.eta_ = 1.0;
    PComponent p4;
    p4.degree = 4;
    for (int i = 0; i < dim; ++i) {
        MonomialTerm t;
        t.exps.assign(static_cast<std::size_t>(dim), 0u);
        t.exps[static_cast<std::size_t>(i)] = 4u;
        t.coeff = 1.0;
        p4.terms.push_back(std::move(t));
    }
    q.p_.push_back(std::move(p4));
    return q;
}

SepPolyQ SepPolyQ::from_components(int dim, std::vector<PComponent> p_components, std::size_t sphere_samples,
                                   double safety) {
    if (dim < 1) throw ConfigError("seppoly: dimension must be >= 1");
    if (p_components.empty()) throw ConfigError("seppoly: at least one component required");
    unsigned n = 0;
    for (const auto& c : p_components) {
        if (c.degree == 0) throw ConfigError("seppoly: components must have degree >= 1 (q(0) = 0)");
        for (const auto& t : c.terms) {
            if (t.exps.size() != static_cast<std::size_t>(dim))
                throw ConfigError("seppoly: exponent tuple length must equal the dimension");
            unsigned total = 0;
            for (unsigned e : t.exps) total += e;
            if (total != c.degree) throw ConfigError("seppoly: monomial degree does not match its component");
        }
        n = std::max(n, c.degree);
    }

    SepPolyQ q;
    q.kind_ = Kind::generic;
    q.dim_ = dim;
    q.n_half_ = n;
    q.p_ = std::move(p_components);

    // Sphere infimum of sum p_i^2, then scale so the certified eta is >= 1.
    // Degeneracy is judged relative to the sphere supremum: a sampled
    // infimum many orders below it means p vanishes somewhere on the sphere.
    auto pts = sphere_points(dim, sphere_samples);
    double inf = std::numeric_limits<double>::infinity();
    double sup = 0.0;
    for (std::size_t i = 0; i < sphere_samples; ++i) {
        std::span<const double> u(pts.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
        double s = 0.0;
        for (const auto& c : q.p_) {
            double v = c.eval(u);
            s += v * v;
        }
        inf = std::min(inf, s);
        sup = std::max(sup, s);
    }
    if (!(inf > 1e-8 * sup) || !(inf > 0.0))
        throw ConfigError("seppoly: sampled sphere infimum is not strictly positive; p is not separating here");
    q.scale_ = safety / inf;
    q.eta_ = q.scale_ * inf;  // = safety, recorded post-scaling estimate
    return q;
}

double SepPolyQ::operator()(std::span<const double> y) const {
    switch (kind_) {
        case Kind::euclidean4: {
            double s = norm2(y);
            return s * s;
        }
        case Kind::quartic_sum: {
            double s = 0.0;
            for (double v : y) {
                double v2 = v * v;
                s += v2 * v2;
            }
            return scale_ * s * s;
        }
        case Kind::generic: {
            double s = 0.0;
            for (const auto& c : p_) {
                double v = c.eval(y);
                s += v * v;
            }
            return scale_ * s;
        }
    }
    return 0.0;
}

void SepPolyQ::derive_constants(double R) {
    if (!(R > 1.0)) throw ConfigError("seppoly: R must exceed 1");
    R_ = R;
    ai_.assign(n_half_ + 1, 0.0);

    if (kind_ == Kind::euclidean4) {
        ai_[2] = 1.0;
    } else if (kind_ == Kind::quartic_sum) {
        ai_[4] = scale_;  // sup of (sum y^4)^2 on the unit ball is at an axis
    } else {
        // Per-component sup over the unit sphere (homogeneous, so the ball
        // sup is attained there), sampled with a safety multiplier.
        constexpr std::size_t kSamples = 65536;
        auto pts = sphere_points(dim_, kSamples);
        for (const auto& c : p_) {
            double sup = 0.0;
            for (std::size_t i = 0; i < kSamples; ++i) {
                std::span<const double> u(pts.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_));
                double v = c.eval(u);
                sup = std::max(sup, scale_ * v * v);
            }
            ai_[c.degree] = std::max(ai_[c.degree], 1.05 * sup);
        }
    }

    k1_ = 0.0;
    for (double a : ai_) k1_ += a;

    double r2 = 2.0 * R;
    m_ = std::max(1.0, k1_ * std::max(r2, pow_int(r2, 2 * n_half_)));

    if (kind_ == Kind::euclidean4) {
        lq_ = 4.0 * pow_int(r2, 3);  // sup ||grad ||y||^4|| = 4 r^3
    } else if (kind_ == Kind::quartic_sum) {
        lq_ = 8.0 * scale_ * pow_int(r2, 7);  // grad = 8 d^2 (sum y^4) y^3, axis-maximal
    } else {
        constexpr std::size_t kSamples = 65536;
        auto pts = sphere_points(dim_, kSamples);
        std::vector<double> g(static_cast<std::size_t>(dim_)), gi(static_cast<std::size_t>(dim_));
        std::vector<double> y(static_cast<std::size_t>(dim_));
        Rng radius_rng(0xabcdef12ULL);
        double sup = 0.0;
        for (std::size_t i = 0; i < kSamples; ++i) {
            double r = r2 * std::pow(radius_rng.uniform(), 1.0 / dim_);
            for (int k = 0; k < dim_; ++k)
                y[static_cast<std::size_t>(k)] = r * pts[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(k)];
            std::fill(g.begin(), g.end(), 0.0);
            for (const auto& c : p_) {
                double v = c.eval(y);
                c.grad(y, gi);
                for (int k = 0; k < dim_; ++k) g[static_cast<std::size_t>(k)] += 2.0 * scale_ * v * gi[static_cast<std::size_t>(k)];
            }
            sup = std::max(sup, std::sqrt(norm2(g)));
        }
        lq_ = 1.05 * sup;
    }

    if (!std::isfinite(m_) || !std::isfinite(lq_)) throw std::overflow_error("seppoly: constant derivation overflowed");
}

double SepPolyQ::cover_radius_for(double gamma1) const {
    if (!constants_ready()) throw std::logic_error("seppoly: derive_constants must run first");
    if (!(gamma1 > 0.0)) throw ConfigError("seppoly: gamma1 must be positive");
    auto bound = [&](double r) {
        double s = 0.0;
        for (std::size_t i = 1; i < ai_.size(); ++i)
            if (ai_[i] > 0.0) s += ai_[i] * pow_int(r, 2 * static_cast<unsigned>(i));
        return s;
    };
    double lo = 0.0, hi = 2.0 * R_;
    if (bound(hi) <= gamma1) return hi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (bound(mid) <= gamma1 ? lo : hi) = mid;
    }
    return lo;
}

SepPolyQ::BoundsDiag SepPolyQ::check_bounds(std::span<const double> y) const {
    BoundsDiag d{};
    d.q_value = (*this)(y);
    double ny = std::sqrt(norm2(y));
    d.norm_pow_2n = pow_int(ny, 2 * n_half_);
    d.lower_checked = d.q_value < 1.0;
    d.lower_ok = !d.lower_checked || d.norm_pow_2n <= d.q_value + 1e-12;
    if (constants_ready())
        d.upper_ok = d.q_value <= k1_ * std::max(ny, d.norm_pow_2n) * (1.0 + 1e-12) + 1e-300;
    else
        d.upper_ok = true;
    return d;
}

}  // namespace gapx
