#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gapx/mollifier.hpp"
#include "gapx/numeric.hpp"
#include "gapx/rng.hpp"

using namespace gapx;

namespace {

// bisection for the z with erf(z) = target (test-side oracle)
double erf_inverse(double target) {
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (std::erf(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// slow reference nu: plain Simpson refinement over s with every coordinate
// kept, no classification, no breakpoints
double nu_reference(const MollifierFamily& fam, std::span<const double> coords) {
    std::size_t n = coords.size();
    std::vector<double> sigma(n);
    for (std::size_t c = 0; c < n; ++c) sigma[c] = std::exp(fam.log_sigma(c + 1, n));
    auto integrand = [&](double s) {
        double blo = fam.bump().level_lo(s);
        double bhi = fam.bump().level_hi(s);
        double p = 1.0;
        for (std::size_t c = 0; c < n; ++c)
            p *= normal_interval_mass((blo - coords[c]) / sigma[c], (bhi - coords[c]) / sigma[c]);
        return p;
    };
    std::size_t steps = 1 << 16;
    double sum = integrand(0.0) + integrand(1.0);
    for (std::size_t i = 1; i < steps; ++i) sum += integrand(i / static_cast<double>(steps)) * (i % 2 ? 4.0 : 2.0);
    return sum / (3.0 * steps);
}

}  // namespace

TEST_CASE("bump boundary values are exact") {
    BumpSpec b{0.004, 16.0};
    b.validate();
    CHECK(b(2.0 * 0.004) == 1.0);
    CHECK(b(3.0 * 0.004) == 0.0);
    CHECK(b(17.0) == 0.0);  // M + 1
    CHECK(b(18.0) == 1.0);  // M + 2
    CHECK(b(0.0) == 1.0);
    CHECK(b(1.0) == 0.0);
    double mid = b(2.5 * 0.004);
    CHECK(mid == doctest::Approx(0.5).epsilon(1e-14));  // quintic smoothstep at 1/2
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    CHECK(b.lb() == doctest::Approx(15.0 / (8.0 * 0.004)));
}

TEST_CASE("bump level sets match the transitions") {
    BumpSpec b{0.004, 16.0};
    // {b < s}: left endpoint sweeps [2g1, 3g1], right sweeps [M+1, M+2]
    CHECK(b.level_lo(1.0) == doctest::Approx(0.008).epsilon(1e-12));
    CHECK(b.level_lo(1e-12) == doctest::Approx(0.012).epsilon(1e-6));
    CHECK(b.level_hi(1.0) == doctest::Approx(18.0));
    CHECK(b.level_hi(1e-12) == doctest::Approx(17.0));
    // consistency: b(level_lo(s)) == s on the ramp
    for (double s : {0.1, 0.35, 0.6, 0.9})
        CHECK(b(b.level_lo(s)) == doctest::Approx(s).epsilon(1e-9));
}

TEST_CASE("tensor bump b_n") {
    BumpSpec b{0.004, 16.0};
    std::vector<double> mid(4, 0.5 * (3.0 * 0.004 + 17.0));
    CHECK(bump_bn(b, mid) == 1.0);  // one on A_n'
    mid[2] = 0.004;                 // any coordinate at b = 1 kills it
    CHECK(bump_bn(b, mid) == 0.0);
    std::vector<double> one{2.5 * 0.004};
    CHECK(bump_bn(b, one) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("kappa schedule: factorial bound closed form, tail bound dominates") {
    BumpSpec b{0.004, 16.0};
    double g2 = 12.0 * 0.004;  // default ratio gamma2 = 12 gamma1
    MollifierFamily fam(b, g2, 8);

    // factorial clause at n = 1: kappa >= (T_hat_1 / Vol(A_1))^2 = 2 pi / side^2
    double side = 16.0 + 2.0 - 2.0 * 0.004;
    double kappa_fact = 2.0 * M_PI / (side * side);
    CHECK(kappa_fact == doctest::Approx(0.0194).epsilon(0.01));
    CHECK(fam.log_kappa(1) >= std::log(kappa_fact) - 1e-9);

    // tail clause at n = 1 from the erf oracle: 1 - erf(g2 sqrt(kappa)/(2 sqrt 2)) <= 0.05
    double z = erf_inverse(0.95);
    double kappa_tail = std::pow(z * 2.0 * std::sqrt(2.0) / g2, 2);
    CHECK(std::exp(fam.log_kappa(1)) == doctest::Approx(kappa_tail).epsilon(1e-6));
    CHECK(kappa_tail > 100.0 * kappa_fact);  // tail dominates

    // closed-form log T_hat: product of sqrt(pi 2^j)
    for (std::size_t n : {1u, 2u, 5u}) {
        double acc = 0.0;
        for (std::size_t j = 1; j <= n; ++j) acc += 0.5 * std::log(M_PI * std::pow(2.0, static_cast<double>(j)));
        CHECK(fam.log_T_hat(n) == doctest::Approx(acc).epsilon(1e-12));
        CHECK(fam.log_vol_A(n) == doctest::Approx(n * std::log(side)).epsilon(1e-12));
        CHECK(fam.log_T(n) == doctest::Approx(fam.log_T_hat(n) - 0.5 * n * fam.log_kappa(n)).epsilon(1e-12));
    }

    // schedule replay: every clause holds, kappa nondecreasing, tail < 1/2
    for (std::size_t n = 1; n <= 8; ++n) {
        CHECK(fam.schedule_ok(n));
        CHECK(fam.tail_quantity(n) < 0.5);
        if (n > 1) CHECK(fam.log_kappa(n) >= fam.log_kappa(n - 1) - 1e-12);
    }
}

TEST_CASE("nu: certified-one region and deep-inside erf bound") {
    BumpSpec b{0.004, 16.0};
    MollifierFamily fam(b, 0.048, 6);

    // coordinates in the flat middle: exactly 1 (certified-one path)
    std::vector<double> mid(3, 8.0);
    auto r = fam.nu(mid, NuBackend::layercake, {});
    CHECK(r.value == 1.0);

    // coordinates 6.5 sigma inside the zero-plateau of b: nu >= 1 - n 2 Phi(6)
    std::size_t n = 3;
    std::vector<double> coords(n);
    for (std::size_t c = 0; c < n; ++c)
        coords[c] = 3.0 * 0.004 + 6.5 * std::exp(fam.log_sigma(c + 1, n));
    auto r2 = fam.nu(coords, NuBackend::layercake, {});
    double tail6 = 2.0 * normal_upper_tail(6.0);
    CHECK(r2.value >= 1.0 - static_cast<double>(n) * tail6 - 1e-7);
    CHECK(r2.value <= 1.0);
}

TEST_CASE("nu: covered coordinate forces the value toward zero") {
    BumpSpec b{0.004, 16.0};
    MollifierFamily fam(b, 0.048, 6);
    // coordinate at zero, second one neutral; at n = 2 the schedule's
    // localization clause caps sigma_1 at gamma1/5
    std::vector<double> coords{0.0, 8.0};
    double sigma1 = std::exp(fam.log_sigma(1, 2));
    CHECK(sigma1 <= 0.004 / 5.0 + 1e-12);
    auto r = fam.nu(coords, NuBackend::layercake, {});
    double bound = normal_upper_tail(2.0 * 0.004 / sigma1);
    CHECK(r.value <= bound + 1e-12);
    CHECK(r.value >= 0.0);
}

TEST_CASE("nu matches the slow reference and Monte Carlo") {
    BumpSpec b{0.004, 16.0};
    MollifierFamily fam(b, 0.048, 5);
    Rng rng(0x31337ULL);
    NuOptions opts;
    opts.mc_samples = 200000;
    int nontrivial = 0;
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 1 + rng.next_u64() % 5;
        std::vector<double> coords(n);
        for (auto& v : coords) {
            double u = rng.uniform();
            if (u < 0.4) v = rng.uniform(0.0, 4.0 * 0.004);  // near the lower ramp
            else if (u < 0.6) v = rng.uniform(0.0, 17.5);
            else v = rng.uniform(0.012, 17.0);
        }
        opts.seed_key = seed_mix(0x55, static_cast<std::uint64_t>(trial));
        auto lc = fam.nu(coords, NuBackend::layercake, opts);
        double ref = nu_reference(fam, coords);
        CHECK(std::abs(lc.value - ref) < 5e-6);
        auto cc = nu_cross_check(fam, coords, opts);
        INFO("trial ", trial, " lc ", cc.layercake.value, " mc ", cc.montecarlo.value, " se ",
             cc.montecarlo.err);
        CHECK(std::abs(cc.layercake.value - cc.montecarlo.value) <= 5.0 * cc.montecarlo.err + 1e-9);
        if (lc.value > 1e-6 && lc.value < 1.0 - 1e-6) ++nontrivial;
    }
    CHECK(nontrivial > 5);  // the sampler must actually exercise the transition zone
}

TEST_CASE("nu is Lipschitz in the sup norm with constant lb") {
    BumpSpec b{0.004, 16.0};
    MollifierFamily fam(b, 0.048, 4);
    Rng rng(0xabcdULL);
    std::size_t n = 3;
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<double> x(n), y(n);
        double dinf = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            x[c] = rng.uniform(0.0, 0.03);
            y[c] = x[c] + rng.uniform(-0.004, 0.004);
            dinf = std::max(dinf, std::abs(y[c] - x[c]));
        }
        double a = fam.nu(x, NuBackend::layercake, {}).value;
        double bb = fam.nu(y, NuBackend::layercake, {}).value;
        CHECK(std::abs(a - bb) <= b.lb() * dinf + 1e-7);
    }
}

TEST_CASE("phi_0 is identically one; phi sweep matches single evaluations") {
    auto dom = Domain::make(1, 2.0, DomainShape::box);
    auto q = SepPolyQ::euclidean4(1);
    q.derive_constants(2.0);
    Net net = build_net(dom, q, GammaTriple{0.0625, 0.5, 0.8});
    REQUIRE(net.count == 5);
    MollifierFamily fam(BumpSpec{0.0625, q.M()}, 0.5, net.count);

    for (double t : {-0.77, -0.31, 0.0, 0.3, 0.65, 0.94}) {
        std::vector<double> x{t};
        CHECK(phi_n(fam, q, net, x, 0) == 1.0);

        std::vector<double> dq(net.count);
        for (std::size_t j = 0; j < net.count; ++j) {
            double diff = t - net.pts[j];
            dq[j] = q(std::vector<double>{diff});
        }
        auto sweep = fam.phi_sweep(dq, NuBackend::layercake, {});
        CHECK(sweep.phi[0] == 1.0);
        for (std::size_t n = 1; n <= net.count; ++n) {
            double single = phi_n(fam, q, net, x, n);
            INFO("t ", t, " n ", n);
            CHECK(std::abs(sweep.phi[n] - single) < 1e-7);
            CHECK(sweep.phi[n] >= 0.0);
            CHECK(sweep.phi[n] <= 1.0);
        }

        // emergence at the first level-2 cover index
        std::size_t j0 = 0;
        for (std::size_t j = 0; j < net.count; ++j)
            if (dq[j] < 0.5) {
                j0 = j + 1;
                break;
            }
        REQUIRE(j0 >= 1);
        CHECK(sweep.phi[j0 - 1] > 0.5);
    }
}

TEST_CASE("phi localization past a covered index") {
    auto dom = Domain::make(1, 2.0, DomainShape::box);
    auto q = SepPolyQ::euclidean4(1);
    q.derive_constants(2.0);
    Net net = build_net(dom, q, GammaTriple{0.0625, 0.5, 0.8});
    MollifierFamily fam(BumpSpec{0.0625, q.M()}, 0.5, net.count);
    const double g1 = 0.0625;

    std::vector<double> x{0.52};  // q(x - 0.5) = 0.02^4, deep in C_4^1
    std::vector<double> dq(net.count);
    for (std::size_t j = 0; j < net.count; ++j) dq[j] = pow_int(0.52 - net.pts[j], 4);
    std::size_t j0 = 0;
    double dq0 = 0.0;
    for (std::size_t j = 0; j < net.count; ++j)
        if (dq[j] < g1) {
            j0 = j + 1;
            dq0 = dq[j];
            break;
        }
    REQUIRE(j0 >= 1);
    double rho = (2.0 * g1 - dq0 - 2.4 * g1 / 5.0) / q.Lq();
    REQUIRE(rho > 0.0);
    for (double frac : {0.3, 0.99}) {
        for (int side = -1; side <= 1; side += 2) {
            std::vector<double> xz{0.52 + side * frac * rho};
            for (std::size_t n = j0 + 1; n <= net.count; ++n)
                CHECK(phi_n(fam, q, net, xz, n) < 0.01);
        }
    }
}
