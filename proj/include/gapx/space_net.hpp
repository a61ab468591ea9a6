#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "gapx/seppoly.hpp"

namespace gapx {

enum class DomainShape { ball, box };

// The bounded open domain G, origin-centered and contained in B_R(0).
// Ball: open unit ball. Box: open cube of half-width min(1, 0.99 R / sqrt(d)).
struct Domain {
    int dim = 0;
    double R = 0.0;
    DomainShape shape = DomainShape::ball;
    double scale = 0.0;  // ball radius / box half-width

    // Throws ConfigError on d < 1 or R <= 1.
    static Domain make(int dim, double R, DomainShape shape);

    bool contains(std::span<const double> x) const;         // open
    bool contains_closed(std::span<const double> x) const;  // closure
    // Euclidean distance from p to the closure (0 if inside).
    double distance_to_closure(std::span<const double> p) const;
    // Project p onto the closure in place.
    void project(std::span<double> p) const;

    // Deterministic quasi-random points of the open domain (Halton), row-major.
    std::vector<double> quasi_random_points(std::size_t count, std::size_t skip = 64) const;
};

struct GammaTriple {
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;
    // Enforces 0 < g1 < g2 < g3 < 1 and 3 g1 < g2 / 2.
    void validate() const;
};

// Default triple from the modulus scale delta: g3 = min(0.9, delta^{2n}/2),
// g2 = g3/2, g1 = g2/12.
GammaTriple gammas_from_delta(double delta, unsigned degree_2n);

// Finite covering net {x_j}: lattice of spacing s = r_target/sqrt(d)
// intersected with the closure of G (outside-but-near lattice points are
// projected onto the boundary), ordered lexicographically by lattice
// coordinates. r_target solves sum_i A_i r^{2i} = gamma1, so the covering
// radius r1 = r_target/2 puts every domain point strictly inside some
// gamma1-cell.
struct Net {
    int dim = 0;
    std::size_t count = 0;
    std::vector<double> pts;  // count x dim, row-major
    double spacing = 0.0;
    double cover_radius = 0.0;
    GammaTriple gammas;

    std::span<const double> point(std::size_t j0) const {
        return {pts.data() + j0 * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    nlohmann::json to_json() const;
};

// Throws CapacityError if the lattice would exceed cap points.
Net build_net(const Domain& dom, const SepPolyQ& q, GammaTriple gammas, std::size_t cap = 200000);

// x in C_j^i = { q(x - x_j) < gamma_i }, strict IEEE comparison.
// j0 is zero-based; level is 1, 2 or 3.
bool cover_membership(const Net& net, const SepPolyQ& q, std::span<const double> x, std::size_t j0, int level);

}  // namespace gapx
