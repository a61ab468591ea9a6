#include "gapx/space_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gapx/errors.hpp"
#include "gapx/rng.hpp"

namespace gapx {

Domain Domain::make(int dim, double R, DomainShape shape) {
    if (dim < 1) throw ConfigError("domain: dimension must be >= 1");
    if (!(R > 1.0)) throw ConfigError("domain: R must exceed 1");
    Domain d;
    d.dim = dim;
    d.R = R;
    d.shape = shape;
    d.scale = shape == DomainShape::ball ? 1.0 : std::min(1.0, 0.99 * R / std::sqrt(static_cast<double>(dim)));
    return d;
}

bool Domain::contains(std::span<const double> x) const {
    if (shape == DomainShape::ball) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s < scale * scale;
    }
    for (double v : x)
        if (!(std::abs(v) < scale)) return false;
    return true;
}

bool Domain::contains_closed(std::span<const double> x) const {
    if (shape == DomainShape::ball) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s <= scale * scale;
    }
    for (double v : x)
        if (std::abs(v) > scale) return false;
    return true;
}

double Domain::distance_to_closure(std::span<const double> p) const {
    if (shape == DomainShape::ball) {
        double s = 0.0;
        for (double v : p) s += v * v;
        return std::max(0.0, std::sqrt(s) - scale);
    }
    double s = 0.0;
    for (double v : p) {
        double over = std::max(0.0, std::abs(v) - scale);
        s += over * over;
    }
    return std::sqrt(s);
}

void Domain::project(std::span<double> p) const {
    if (shape == DomainShape::ball) {
        double s = 0.0;
        for (double v : p) s += v * v;
        double n = std::sqrt(s);
        if (n > scale && n > 0.0) {
            double f = scale / n;
            for (double& v : p) v *= f;
            // rounding can leave the image one ulp outside the closure
            for (int guard = 0; guard < 4 && !contains_closed(p); ++guard)
                for (double& v : p) v *= 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
        }
        return;
    }
    for (double& v : p) v = std::clamp(v, -scale, scale);
}

std::vector<double> Domain::quasi_random_points(std::size_t count, std::size_t skip) const {
    Halton seq(dim, skip);
    std::vector<double> out;
    out.reserve(count * static_cast<std::size_t>(dim));
    std::vector<double> u(static_cast<std::size_t>(dim));
    std::size_t accepted = 0;
    while (accepted < count) {
        seq.next(u);
        for (double& v : u) v = scale * (2.0 * v - 1.0);
        if (!contains(u)) continue;
        out.insert(out.end(), u.begin(), u.end());
        ++accepted;
    }
    return out;
}

void GammaTriple::validate() const {
    if (!(g1 > 0.0 && g1 < g2 && g2 < g3 && g3 < 1.0))
        throw ConfigError("gammas: need 0 < g1 < g2 < g3 < 1");
    if (!(3.0 * g1 < 0.5 * g2)) throw ConfigError("gammas: need 3 g1 < g2 / 2");
}

GammaTriple gammas_from_delta(double delta, unsigned degree_2n) {
    if (!(delta > 0.0)) throw ConfigError("gammas: delta must be positive");
    double g3 = std::isinf(delta) ? 0.9 : std::min(0.9, 0.5 * std::pow(delta, static_cast<double>(degree_2n)));
    GammaTriple g{g3 / 24.0, g3 / 2.0, g3};
    g.validate();
    return g;
}

Net build_net(const Domain& dom, const SepPolyQ& q, GammaTriple gammas, std::size_t cap) {
    gammas.validate();
    if (!q.constants_ready()) throw std::logic_error("build_net: q constants must be derived first");

    const int d = dom.dim;
    const double r_target = q.cover_radius_for(gammas.g1);
    const double s = r_target / std::sqrt(static_cast<double>(d));
    const double r1 = 0.5 * s * std::sqrt(static_cast<double>(d));  // deep-hole radius = r_target / 2
    if (!(s > 0.0)) throw CapacityError("build_net: required spacing underflowed");

    const long k_max = static_cast<long>(std::floor((dom.scale + r1) / s)) + 1;
    // lattice candidate count grows like (2 k_max + 1)^d
    double cand = 1.0;
    for (int i = 0; i < d; ++i) cand *= static_cast<double>(2 * k_max + 1);
    if (cand > 64.0 * static_cast<double>(cap))
        throw CapacityError("build_net: lattice candidate count exceeds the configured cap");

    Net net;
    net.dim = d;
    net.spacing = s;
    net.cover_radius = r1;
    net.gammas = gammas;

    std::vector<long> k(static_cast<std::size_t>(d), -k_max);
    std::vector<double> p(static_cast<std::size_t>(d));
    bool done = false;
    while (!done) {
        for (int i = 0; i < d; ++i) p[static_cast<std::size_t>(i)] = static_cast<double>(k[static_cast<std::size_t>(i)]) * s;
        double dist = dom.distance_to_closure(p);
        if (dist <= r1 * (1.0 + 1e-12)) {
            if (dist > 0.0) dom.project(p);
            net.pts.insert(net.pts.end(), p.begin(), p.end());
            if (++net.count > cap) throw CapacityError("build_net: net size exceeds the configured cap");
        }
        // lexicographic increment
        int i = d - 1;
        for (; i >= 0; --i) {
            if (++k[static_cast<std::size_t>(i)] <= k_max) break;
            k[static_cast<std::size_t>(i)] = -k_max;
        }
        done = i < 0;
    }
    if (net.count == 0) throw std::logic_error("build_net: empty net");
    return net;
}

bool cover_membership(const Net& net, const SepPolyQ& q, std::span<const double> x, std::size_t j0, int level) {
    if (j0 >= net.count) throw std::out_of_range("cover_membership: net index out of range");
    if (level < 1 || level > 3) throw std::invalid_argument("cover_membership: level must be 1, 2 or 3");
    auto xj = net.point(j0);
    std::vector<double> diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - xj[i];
    double g = level == 1 ? net.gammas.g1 : level == 2 ? net.gammas.g2 : net.gammas.g3;
    return q(diff) < g;
}

nlohmann::json Net::to_json() const {
    nlohmann::json j;
    j["dim"] = dim;
    j["count"] = count;
    j["spacing"] = spacing;
    j["cover_radius"] = cover_radius;
    j["gammas"] = {gammas.g1, gammas.g2, gammas.g3};
    j["points"] = pts;
    return j;
}

}  // namespace gapx
