// Acceptance suite: runs every quantitative guarantee of the construction at
// full scale and prints one pass/fail line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gapx/approximant.hpp"
#include "gapx/gauge.hpp"
#include "gapx/runconfig.hpp"
#include "gapx/verify.hpp"

using namespace gapx;

namespace {

int g_failures = 0;

void report(int idx, bool pass, const std::string& what) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", idx, what.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct BatterySummary {
    bool pass = true;
    std::string detail;
};

BatterySummary digest(const std::vector<verify::PropertyResult>& rs) {
    BatterySummary s;
    double worst = std::numeric_limits<double>::infinity();
    std::string worst_name;
    std::size_t checked = 0;
    for (const auto& r : rs) {
        checked += r.checked;
        s.pass = s.pass && r.pass();
        if (r.worst_margin < worst) {
            worst = r.worst_margin;
            worst_name = r.name;
        }
        if (!r.pass()) s.detail += " FAILED[" + r.name + "]";
    }
    s.detail = fmt(static_cast<double>(checked)) + " checks, worst margin " + fmt(worst) + " (" +
               worst_name + ")" + s.detail;
    return s;
}

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;

    // Theorem-1 desk-scale instance: unit disk in R^2 inside B_1.5, q = ||.||^4,
    // F(x) = x1 sin(2 x2) with Lipschitz constant 2 (|grad|^2 <= sin^2 + 4cos^2 <= 4
    // whenever |x1| <= 1), eps = 0.2.
    RunConfig main_cfg;
    main_cfg.dim = 2;
    main_cfg.R = 1.5;
    main_cfg.shape = DomainShape::ball;
    main_cfg.q_builtin = "euclidean4";
    main_cfg.target_name = "x1_sin_2x2";
    main_cfg.epsilon = 0.2;
    main_cfg.seed = 20240817;
    main_cfg.eval_points = 2000;

    auto t0 = clock::now();
    Approximant ap = build_pipeline(main_cfg);
    auto pts = ap.domain().quasi_random_points(2000, 16384);
    auto rep = ap.error_report(pts, 2000);
    double secs = std::chrono::duration<double>(clock::now() - t0).count();

    double min_den_everywhere = rep.min_den;

    // 1. sup error over 2000 quasi-random points, within budget
    {
        bool pass = rep.sup_err < 0.2 && secs <= 600.0;
        report(1, pass,
               "theorem desk-scale: sup|K-F| = " + fmt(rep.sup_err) + " < 0.2, margin " +
                   fmt(0.2 - rep.sup_err) + ", N = " + fmt(static_cast<double>(ap.net().count)) +
                   ", " + fmt(secs) + " s (layer-cake)");
    }

    // 2. constant exactness
    {
        RunConfig ccfg = main_cfg;
        ccfg.target_name = "constant";
        ccfg.constant_value = 5.0;
        Approximant cap = build_pipeline(ccfg);
        auto cpts = cap.domain().quasi_random_points(500, 16384);
        auto crep = cap.error_report(cpts, 500);
        min_den_everywhere = std::min(min_den_everywhere, crep.min_den);
        report(2, crep.sup_err <= 1e-8,
               "constant target: sup|K-5| = " + fmt(crep.sup_err) + " <= 1e-8");
    }

    // 3. gauge battery, 1e5 vectors + frozen value at (1,1)
    {
        auto rs = verify::gauge_battery(100000, main_cfg.seed);
        auto s = digest(rs);
        const double ones[2] = {1.0, 1.0};
        double lam = gauge_lambda(std::span<const double>(ones, 2));
        double oracle = lambda_oracle(std::span<const double>(ones, 2));
        bool frozen = std::abs(lam - 1.2720196) <= 1e-6 + 5e-8 && std::abs(lam - oracle) <= 1e-6;
        report(3, s.pass && frozen, "gauge battery: " + s.detail + "; lambda(1,1) = " + fmt(lam));
    }

    // 4. Lemma 2 battery on both instances, 1e5 samples each
    {
        auto q2 = SepPolyQ::euclidean4(2);
        q2.derive_constants(1.5);
        auto r2 = verify::lemma2_battery(q2, 1.5, 100000, main_cfg.seed + 1);
        auto q3 = SepPolyQ::quartic_sum(3);
        q3.derive_constants(1.5);
        auto r3 = verify::lemma2_battery(q3, 1.5, 100000, main_cfg.seed + 2);
        auto s2 = digest(r2), s3 = digest(r3);
        report(4, s2.pass && s3.pass,
               "separating polynomial bounds: ||.||^4 {" + s2.detail + "}; scaled quartic sum d=3 {" +
                   s3.detail + "}");
    }

    // 5. Lemma 3 battery on the theorem instance
    {
        auto rs = verify::lemma3_battery(ap, 10000, 100, 2000, main_cfg.seed + 3);
        auto s = digest(rs);
        report(5, s.pass, "mollifier battery: " + s.detail);
    }

    // 6. Lemma 4 battery: 1e4-point sweep over every j
    {
        auto rs = verify::lemma4_battery(ap, 10000, main_cfg.seed + 4);
        auto s = digest(rs);
        report(6, s.pass, "gate battery: " + s.detail);
    }

    // 7. denominator floor at every evaluated point of every run
    report(7, min_den_everywhere >= 0.8 - 1e-6,
           "denominator floor: min lambda({u_j}) = " + fmt(min_den_everywhere) + " >= 4/5 - 1e-6");

    // 8. gate certification margins + negative control
    {
        const auto& gs = ap.gates();
        bool pos = gs.rep1.pass && gs.rep2.pass && gs.reph.pass && gs.rep1.worst_margin > 0.0 &&
                   gs.rep2.worst_margin > 0.0 && gs.reph.worst_margin > 0.0;
        GateSpec broken;
        broken.dom_lo = 0.0;
        broken.dom_hi = 1.05;
        broken.constraints = {{GateConstraint::Rel::at_least, 2.0, 0.0, 0.45, "negative control"}};
        bool control_fails = !certify_gate(gs.zeta2, broken).pass;
        report(8, pos && control_fails,
               "gate certification: margins (" + fmt(gs.rep1.worst_margin) + ", " +
                   fmt(gs.rep2.worst_margin) + ", " + fmt(gs.reph.worst_margin) +
                   ") all positive; negative control rejected");
    }

    // 9. Lipschitz behavior of K under shrinking pair distances
    {
        auto lr = ap.lipschitz_estimate(128, main_cfg.seed + 5);
        double d2 = lr.by_distance[0].second, d3 = lr.by_distance[1].second, d4 = lr.by_distance[2].second;
        bool below = lr.empirical <= lr.chain_bound;
        bool stable = d4 <= 2.0 * std::max(d2, d3) + 1e-9;
        report(9, below && stable,
               "Lipschitz: empirical " + fmt(lr.empirical) + " <= chain bound " + fmt(lr.chain_bound) +
                   "; quotients at 1e-2/1e-3/1e-4: " + fmt(d2) + " / " + fmt(d3) + " / " + fmt(d4));
    }

    // 10. byte-identical point tables for identical config + seed
    {
        RunConfig rcfg;
        rcfg.dim = 2;
        rcfg.R = 1.5;
        rcfg.shape = DomainShape::ball;
        rcfg.target_name = "coordinate";
        rcfg.epsilon = 0.25;
        rcfg.eval_points = 300;
        rcfg.seed = 99;
        std::ostringstream log;
        rcfg.out_dir = "acceptance_out/repro_1";
        rcfg.workers = 1;
        int rc1 = run_experiment(rcfg, log);
        rcfg.out_dir = "acceptance_out/repro_2";
        rcfg.workers = 2;
        int rc2 = run_experiment(rcfg, log);
        bool same = rc1 == kExitOk && rc2 == kExitOk &&
                    read_bytes("acceptance_out/repro_1/points.csv") ==
                        read_bytes("acceptance_out/repro_2/points.csv");
        report(10, same, "reproducibility: identical config+seed gives byte-identical point tables");
    }

    if (g_failures) std::printf("%d criterion(s) FAILED\n", g_failures);
    else std::printf("all 10 criteria passed\n");
    return g_failures == 0 ? 0 : 1;
}
