#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gapx/approximant.hpp"
#include "gapx/errors.hpp"
#include "gapx/verify.hpp"

using namespace gapx;

namespace {

TargetFunction constant_target(double c) {
    TargetFunction t;
    t.f = [c](std::span<const double>) { return c; };
    t.declared_inf = t.declared_sup = c;
    t.lipschitz = 0.0;
    t.exact_modulus = true;
    return t;
}

TargetFunction coordinate_target(double scale) {
    TargetFunction t;
    t.f = [](std::span<const double> x) { return x[0]; };
    t.declared_inf = -scale;
    t.declared_sup = scale;
    t.lipschitz = 1.0;
    t.exact_modulus = true;
    return t;
}

Approximant interval_pipeline(double eps_user) {
    auto dom = Domain::make(1, 2.0, DomainShape::box);
    auto q = SepPolyQ::euclidean4(1);
    ApproximantConfig cfg;
    cfg.seed = 77;
    return Approximant::build(coordinate_target(1.0), dom, q, eps_user, cfg);
}

}  // namespace

TEST_CASE("modulus data: Lipschitz route and table route") {
    TargetFunction t = coordinate_target(1.0);
    CHECK(t.delta_for(0.05) == doctest::Approx(0.05));
    t.lipschitz.reset();
    t.delta_table = {{0.05, 0.04}, {0.2, 0.15}};
    CHECK(t.delta_for(0.1) == doctest::Approx(0.04));   // only the 0.05 row qualifies
    CHECK(t.delta_for(0.25) == doctest::Approx(0.15));
    CHECK_THROWS_AS(t.delta_for(0.01), ConfigError);    // no usable row
    t.lipschitz = 0.0;
    CHECK(std::isinf(t.delta_for(0.1)));
}

TEST_CASE("normalization of F = x1 on the unit disk: a, b, eps, delta") {
    auto dom = Domain::make(2, 1.5, DomainShape::ball);
    auto q = SepPolyQ::euclidean4(2);
    ApproximantConfig cfg;
    cfg.seed = 3;
    Approximant ap = Approximant::build(coordinate_target(1.0), dom, q, 0.2, cfg);
    // affine map solving a inf + b = 1/3, a sup + b = 1
    CHECK(ap.norm_a() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(ap.norm_b() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(ap.eps_internal() == doctest::Approx(0.2 / 3.0).epsilon(1e-12));
    CHECK(ap.delta() == doctest::Approx(0.05).epsilon(1e-12));  // (eps/4)/(a L)
    CHECK(!ap.flat());
    // normalized cache lies in [1/3, 1]
    for (double v : ap.f_net()) {
        CHECK(v >= 1.0 / 3.0 - 1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
    // a couple of evaluations stay within the theorem bound
    auto pts = dom.quasi_random_points(8);
    for (int i = 0; i < 8; ++i) {
        std::span<const double> x(pts.data() + 2 * i, 2);
        auto pe = ap.eval_point(x);
        CHECK(pe.abs_err < 0.2);
        CHECK(pe.den >= 0.8 - 1e-6);
    }
}

TEST_CASE("flat target short-circuits to degenerate normalization; K is exact") {
    auto dom = Domain::make(1, 2.0, DomainShape::box);
    auto q = SepPolyQ::euclidean4(1);
    ApproximantConfig cfg;
    cfg.seed = 5;
    Approximant ap = Approximant::build(constant_target(5.0), dom, q, 0.2, cfg);
    CHECK(ap.flat());
    CHECK(ap.norm_a() == 1.0);
    CHECK(ap.net().gammas.g3 == doctest::Approx(0.9));  // delta is infinite
    auto pts = dom.quasi_random_points(64);
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) {
        std::span<const double> x(pts.data() + static_cast<std::size_t>(i), 1);
        worst = std::max(worst, std::abs(ap.eval_K(x) - 5.0));
    }
    CHECK(worst <= 1e-11);  // 10x root tolerance; forced by gauge homogeneity
}

TEST_CASE("theorem bound end to end on the interval") {
    Approximant ap = interval_pipeline(0.3);
    auto pts = ap.domain().quasi_random_points(200);
    auto rep = ap.error_report(pts, 200);
    CHECK(rep.sup_err < 0.3);
    CHECK(rep.min_den >= 0.8 - 1e-6);
    CHECK(rep.max_offJ_u < 0.25 * ap.eps_internal());
    CHECK(rep.max_J_dF < 0.5 * ap.eps_internal());
    CHECK(rep.min_max_u >= 0.8 - 1e-9);
    CHECK(rep.min_psi_offC3 >= 1.0 - 1e-9);
    CHECK(rep.worst_lip_gap >= -1e-8);
    CHECK(rep.worst_sw_gap >= -1e-8);
    CHECK(rep.range_ok);
}

TEST_CASE("sweep vectors agree with the single-j spec operations") {
    Approximant ap = interval_pipeline(0.3);
    std::vector<double> x{0.37};
    auto sv = ap.sweep_vectors(x);
    REQUIRE(sv.u.size() == ap.net().count);
    for (std::size_t j : {std::size_t(1), std::size_t(2), ap.net().count / 2, ap.net().count}) {
        double psi_single = psi_j(ap.gates(), ap.q(), ap.net(), ap.family(), x, j);
        double u_single = u_j(ap.gates(), ap.q(), ap.net(), ap.family(), x, j);
        CHECK(std::abs(sv.psi[j - 1] - psi_single) < 1e-7);
        CHECK(std::abs(sv.u[j - 1] - u_single) < 1e-7);
    }
}

TEST_CASE("evaluation outside the open domain is rejected") {
    Approximant ap = interval_pipeline(0.3);
    std::vector<double> x{1.0};
    CHECK_THROWS_AS(ap.eval_K(x), std::invalid_argument);
}

TEST_CASE("capacity error on an eps far below the net cap") {
    auto dom = Domain::make(2, 1.5, DomainShape::ball);
    auto q = SepPolyQ::euclidean4(2);
    ApproximantConfig cfg;
    cfg.net_cap = 50000;
    CHECK_THROWS_AS(Approximant::build(coordinate_target(1.0), dom, q, 0.02, cfg), CapacityError);
}

TEST_CASE("declared bounds are spot-checked") {
    auto dom = Domain::make(1, 2.0, DomainShape::box);
    auto q = SepPolyQ::euclidean4(1);
    TargetFunction bad = coordinate_target(1.0);
    bad.declared_inf = -0.1;  // actual range is (-1, 1)
    bad.declared_sup = 0.1;
    CHECK_THROWS_AS(Approximant::build(bad, dom, q, 0.2, ApproximantConfig{}), ConfigError);
}

TEST_CASE("lipschitz estimate: empirical below the chain bound, close pairs stable") {
    Approximant ap = interval_pipeline(0.3);
    auto lr = ap.lipschitz_estimate(48, 99);
    CHECK(lr.empirical > 0.0);
    CHECK(lr.empirical <= lr.chain_bound);
    REQUIRE(lr.by_distance.size() == 3);
    double d2 = lr.by_distance[0].second;  // 1e-2
    double d3 = lr.by_distance[1].second;  // 1e-3
    double d4 = lr.by_distance[2].second;  // 1e-4
    CHECK(d4 <= 2.0 * std::max(d2, d3) + 1e-9);  // no blow-up as pairs shrink
}

TEST_CASE("verify batteries pass on the interval pipeline") {
    Approximant ap = interval_pipeline(0.3);
    for (const auto& r : verify::lemma3_battery(ap, 300, 25, 64, 0x77)) {
        INFO(r.name, " worst ", r.worst_margin, " note ", r.note);
        CHECK(r.violations == 0);
    }
    for (const auto& r : verify::lemma4_battery(ap, 128, 0x78)) {
        INFO(r.name, " worst ", r.worst_margin, " note ", r.note);
        CHECK(r.violations == 0);
    }
    for (const auto& r : verify::theorem1_battery(ap, 128, 0x79)) {
        INFO(r.name, " worst ", r.worst_margin, " note ", r.note);
        CHECK(r.violations == 0);
    }
}
