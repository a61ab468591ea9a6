#include "gapx/runconfig.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "gapx/errors.hpp"
#include "gapx/verify.hpp"

namespace gapx {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        c.schema_version = j.value("schema_version", 1);
        c.seed = j.value("seed", c.seed);
        c.workers = j.value("workers", 0);
        if (j.contains("domain")) {
            const auto& d = j.at("domain");
            c.dim = d.value("dim", 2);
            c.R = d.value("R", 1.5);
            std::string shape = d.value("shape", "ball");
            if (shape == "ball") c.shape = DomainShape::ball;
            else if (shape == "box") c.shape = DomainShape::box;
            else throw ConfigError("config: unknown domain shape '" + shape + "'");
        }
        if (j.contains("q")) {
            const auto& q = j.at("q");
            if (q.contains("builtin")) {
                c.q_builtin = q.at("builtin").get<std::string>();
                if (c.q_builtin != "euclidean4" && c.q_builtin != "quartic_sum")
                    throw ConfigError("config: unknown q builtin '" + c.q_builtin + "'");
            } else if (q.contains("components")) {
                c.q_builtin = "custom";
                for (const auto& comp : q.at("components")) {
                    PComponent pc;
                    pc.degree = comp.at("degree").get<unsigned>();
                    for (const auto& term : comp.at("terms")) {
                        MonomialTerm t;
                        t.exps = term.at("exponents").get<std::vector<unsigned>>();
                        t.coeff = term.at("coeff").get<double>();
                        pc.terms.push_back(std::move(t));
                    }
                    c.q_components.push_back(std::move(pc));
                }
            } else {
                throw ConfigError("config: q needs 'builtin' or 'components'");
            }
        }
        if (j.contains("target")) {
            const auto& t = j.at("target");
            c.target_name = t.value("builtin", std::string("table"));
            c.constant_value = t.value("value", 0.0);
            if (t.contains("points")) {
                for (const auto& row : t.at("points"))
                    for (double v : row.get<std::vector<double>>()) c.table_points.push_back(v);
                c.table_values = t.at("values").get<std::vector<double>>();
            }
            if (t.contains("lipschitz")) c.lipschitz_override = t.at("lipschitz").get<double>();
            if (t.contains("bounds")) {
                auto b = t.at("bounds").get<std::vector<double>>();
                if (b.size() != 2) throw ConfigError("config: target bounds must be [lo, hi]");
                c.bounds_override = {b[0], b[1]};
            }
        }
        c.epsilon = j.value("epsilon", 0.2);
        c.net_cap = j.value("net_cap", static_cast<std::size_t>(200000));
        if (j.contains("gate_mode")) {
            std::string m = j.at("gate_mode").get<std::string>();
            if (m == "sigmoid") c.gate_mode = GateMode::sigmoid;
            else if (m == "polynomial") c.gate_mode = GateMode::polynomial;
            else throw ConfigError("config: unknown gate mode '" + m + "'");
        }
        if (j.contains("nu_backend")) {
            std::string b = j.at("nu_backend").get<std::string>();
            if (b == "layercake") c.backend = NuBackend::layercake;
            else if (b == "mc" || b == "montecarlo") c.backend = NuBackend::montecarlo;
            else throw ConfigError("config: unknown nu backend '" + b + "'");
        }
        c.mc_samples = j.value("mc_samples", 100000);
        c.root_tol = j.value("root_tol", 1e-12);
        c.quad_tol = j.value("quad_tol", 1e-9);
        c.eval_points = j.value("eval_points", static_cast<std::size_t>(2000));
        c.out_dir = j.value("out_dir", std::string("out"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: parse failure: ") + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["seed"] = seed;
    j["workers"] = workers;
    j["domain"] = {{"dim", dim}, {"R", R}, {"shape", shape == DomainShape::ball ? "ball" : "box"}};
    if (q_builtin == "custom") {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& pc : q_components) {
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& t : pc.terms) terms.push_back({{"exponents", t.exps}, {"coeff", t.coeff}});
            comps.push_back({{"degree", pc.degree}, {"terms", terms}});
        }
        j["q"] = {{"components", comps}};
    } else {
        j["q"] = {{"builtin", q_builtin}};
    }
    nlohmann::json t;
    t["builtin"] = target_name;
    if (target_name == "constant") t["value"] = constant_value;
    if (lipschitz_override) t["lipschitz"] = *lipschitz_override;
    if (bounds_override) t["bounds"] = {bounds_override->first, bounds_override->second};
    if (!table_values.empty()) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < table_values.size(); ++i) {
            std::vector<double> row(table_points.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(dim)),
                                    table_points.begin() + static_cast<std::ptrdiff_t>((i + 1) * static_cast<std::size_t>(dim)));
            rows.push_back(row);
        }
        t["points"] = rows;
        t["values"] = table_values;
    }
    j["target"] = t;
    j["epsilon"] = epsilon;
    j["net_cap"] = net_cap;
    j["gate_mode"] = gate_mode == GateMode::sigmoid ? "sigmoid" : "polynomial";
    j["nu_backend"] = backend == NuBackend::layercake ? "layercake" : "mc";
    j["mc_samples"] = mc_samples;
    j["root_tol"] = root_tol;
    j["quad_tol"] = quad_tol;
    j["eval_points"] = eval_points;
    j["out_dir"] = out_dir;
    return j;
}

Domain make_domain(const RunConfig& cfg) { return Domain::make(cfg.dim, cfg.R, cfg.shape); }

SepPolyQ make_q(const RunConfig& cfg) {
    if (cfg.q_builtin == "euclidean4") return SepPolyQ::euclidean4(cfg.dim);
    if (cfg.q_builtin == "quartic_sum") return SepPolyQ::quartic_sum(cfg.dim);
    return SepPolyQ::from_components(cfg.dim, cfg.q_components);
}

TargetFunction make_target(const RunConfig& cfg, const Domain& dom) {
    TargetFunction t;
    if (cfg.target_name == "constant") {
        double v = cfg.constant_value;
        t.f = [v](std::span<const double>) { return v; };
        t.declared_inf = t.declared_sup = v;
        t.lipschitz = 0.0;
        t.exact_modulus = true;
    } else if (cfg.target_name == "coordinate") {
        t.f = [](std::span<const double> x) { return x[0]; };
        t.declared_inf = -dom.scale;
        t.declared_sup = dom.scale;
        t.lipschitz = 1.0;
        t.exact_modulus = true;
    } else if (cfg.target_name == "x1_sin_2x2") {
        if (dom.dim < 2) throw ConfigError("target: x1_sin_2x2 needs dimension >= 2");
        t.f = [](std::span<const double> x) { return x[0] * std::sin(2.0 * x[1]); };
        // |F| <= |x1| <= scale; grad = (sin 2x2, 2 x1 cos 2x2), so with
        // scale <= 1: |grad|^2 <= sin^2 + 4 cos^2 <= 4.
        t.declared_inf = -dom.scale;
        t.declared_sup = dom.scale;
        t.lipschitz = 2.0;
    } else if (cfg.target_name == "table") {
        if (cfg.table_values.empty()) throw ConfigError("target: table needs points and values");
        if (!cfg.lipschitz_override) throw ConfigError("target: table needs a declared Lipschitz constant");
        std::size_t count = cfg.table_values.size();
        std::size_t d = static_cast<std::size_t>(dom.dim);
        if (cfg.table_points.size() != count * d) throw ConfigError("target: table points/values shape mismatch");
        double L = *cfg.lipschitz_override;
        // data must be L-consistent for the Lipschitz extension to interpolate
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t k = i + 1; k < count; ++k) {
                double dd = 0.0;
                for (std::size_t m = 0; m < d; ++m) {
                    double dv = cfg.table_points[i * d + m] - cfg.table_points[k * d + m];
                    dd += dv * dv;
                }
                if (std::abs(cfg.table_values[i] - cfg.table_values[k]) > L * std::sqrt(dd) * (1.0 + 1e-9))
                    throw ConfigError("target: table values violate the declared Lipschitz constant");
            }
        double vmin = *std::min_element(cfg.table_values.begin(), cfg.table_values.end());
        double vmax = *std::max_element(cfg.table_values.begin(), cfg.table_values.end());
        auto pts = cfg.table_points;
        auto vals = cfg.table_values;
        // midpoint of the two Lipschitz envelopes, clamped to the data range
        t.f = [pts, vals, L, d, vmin, vmax](std::span<const double> x) {
            double up = std::numeric_limits<double>::infinity();
            double lo = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < vals.size(); ++i) {
                double dd = 0.0;
                for (std::size_t m = 0; m < d; ++m) {
                    double dv = x[m] - pts[i * d + m];
                    dd += dv * dv;
                }
                double r = L * std::sqrt(dd);
                up = std::min(up, vals[i] + r);
                lo = std::max(lo, vals[i] - r);
            }
            return std::clamp(0.5 * (up + lo), vmin, vmax);
        };
        t.declared_inf = vmin;
        t.declared_sup = vmax;
        t.lipschitz = L;
    } else {
        throw ConfigError("target: unknown builtin '" + cfg.target_name + "'");
    }
    if (cfg.bounds_override) {
        t.declared_inf = cfg.bounds_override->first;
        t.declared_sup = cfg.bounds_override->second;
    }
    if (cfg.lipschitz_override && cfg.target_name != "table") t.lipschitz = *cfg.lipschitz_override;
    return t;
}

Approximant build_pipeline(const RunConfig& cfg) {
    Domain dom = make_domain(cfg);
    SepPolyQ q = make_q(cfg);
    TargetFunction t = make_target(cfg, dom);
    ApproximantConfig acfg;
    acfg.root_tol = cfg.root_tol;
    acfg.net_cap = cfg.net_cap;
    acfg.gate_mode = cfg.gate_mode;
    acfg.backend = cfg.backend;
    acfg.mc_samples = cfg.mc_samples;
    acfg.seed = cfg.seed;
    acfg.workers = cfg.workers;
    acfg.quad_tol = cfg.quad_tol;
    return Approximant::build(std::move(t), dom, std::move(q), cfg.epsilon, acfg);
}

int run_experiment(const RunConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    try {
        auto t0 = std::chrono::steady_clock::now();
        Approximant ap = build_pipeline(cfg);
        log << "pipeline: N=" << ap.net().count << " gammas=(" << ap.net().gammas.g1 << ", "
            << ap.net().gammas.g2 << ", " << ap.net().gammas.g3 << ") eps_internal=" << ap.eps_internal()
            << "\n";

        auto pts = ap.domain().quasi_random_points(cfg.eval_points, 16384);
        auto rep = ap.error_report(pts, cfg.eval_points);
        auto lip = ap.lipschitz_estimate(std::max<std::size_t>(32, cfg.eval_points / 16), cfg.seed);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        fs::create_directories(cfg.out_dir);
        const std::size_t d = static_cast<std::size_t>(cfg.dim);
        {
            std::ofstream csv(fs::path(cfg.out_dir) / "points.csv", std::ios::binary);
            for (std::size_t k = 0; k < d; ++k) csv << "x" << (k + 1) << ",";
            csv << "F,K,abs_err\n";
            for (std::size_t i = 0; i < rep.points.size(); ++i) {
                for (std::size_t k = 0; k < d; ++k) csv << fmt17(pts[i * d + k]) << ",";
                csv << fmt17(rep.points[i].F) << "," << fmt17(rep.points[i].K) << ","
                    << fmt17(rep.points[i].abs_err) << "\n";
            }
        }

        nlohmann::json invariants = nlohmann::json::array();
        auto add_inv = [&](const std::string& name, bool ok, double margin) {
            invariants.push_back({{"name", name}, {"pass", ok}, {"margin", margin}});
        };
        double eps = ap.eps_internal();
        add_inv("sup_error_below_eps", rep.sup_err < cfg.epsilon, cfg.epsilon - rep.sup_err);
        add_inv("denominator_floor", rep.min_den >= 0.8 - 1e-6, rep.min_den - (0.8 - 1e-6));
        add_inv("off_support_u_below_eps_quarter", rep.max_offJ_u < 0.25 * eps, 0.25 * eps - rep.max_offJ_u);
        add_inv("J_branch_modulus", rep.max_J_dF < 0.5 * eps, 0.5 * eps - rep.max_J_dF);
        add_inv("max_u_floor", rep.min_max_u >= 0.8 - 1e-9, rep.min_max_u - 0.8);
        add_inv("psi_off_support_floor", rep.min_psi_offC3 >= 1.0 - 1e-9, rep.min_psi_offC3 - 1.0);
        add_inv("lipschitz_transfer", rep.worst_lip_gap >= -1e-8, rep.worst_lip_gap);
        add_inv("sandwich_transfer", rep.worst_sw_gap >= -1e-8, rep.worst_sw_gap);
        add_inv("range", rep.range_ok, rep.range_ok ? 0.0 : -1.0);
        bool invariants_ok = true;
        for (const auto& e : invariants) invariants_ok = invariants_ok && e.at("pass").get<bool>();

        nlohmann::json out;
        out["schema_version"] = 1;
        out["config"] = cfg.to_json();
        out["derived"] = ap.derived_json();
        out["results"] = {{"point_count", rep.point_count},
                          {"sup_err", rep.sup_err},
                          {"eps_user", cfg.epsilon},
                          {"min_denominator", rep.min_den},
                          {"max_offJ_u", rep.max_offJ_u},
                          {"max_J_dF", rep.max_J_dF},
                          {"empirical_lipschitz", lip.empirical},
                          {"chain_bound", lip.chain_bound},
                          {"lipschitz_by_distance", lip.by_distance},
                          {"runtime_seconds", secs},
                          {"points_csv", "points.csv"}};
        out["invariants"] = invariants;
        out["pass"] = invariants_ok;
        {
            std::ofstream rj(fs::path(cfg.out_dir) / "report.json", std::ios::binary);
            rj << out.dump(2) << "\n";
        }
        log << "sup|K - F| = " << rep.sup_err << " (eps = " << cfg.epsilon << "), min den = " << rep.min_den
            << ", " << secs << " s\n";
        return invariants_ok ? kExitOk : kExitInvariant;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CapacityError& e) {
        log << "capacity error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const InvariantViolation& e) {
        log << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    }
}

int verify_suite(const RunConfig& cfg, const std::string& suite, std::ostream& log) {
    namespace fs = std::filesystem;
    try {
        std::vector<verify::PropertyResult> results;
        auto run_gauge = [&] {
            auto r = verify::gauge_battery(100000, cfg.seed, GaugeConfig{cfg.root_tol, 200, 1e8});
            results.insert(results.end(), r.begin(), r.end());
        };
        auto run_lemma2 = [&] {
            SepPolyQ q = make_q(cfg);
            q.derive_constants(cfg.R);
            auto r = verify::lemma2_battery(q, cfg.R, 100000, cfg.seed);
            results.insert(results.end(), r.begin(), r.end());
        };
        bool need_pipeline = suite == "lemma3" || suite == "lemma4" || suite == "theorem1" || suite == "all";
        std::optional<Approximant> ap;
        if (need_pipeline) ap.emplace(build_pipeline(cfg));

        if (suite == "gauge" || suite == "all") run_gauge();
        if (suite == "lemma2" || suite == "all") run_lemma2();
        if (suite == "lemma3" || suite == "all") {
            auto r = verify::lemma3_battery(*ap, std::min<std::size_t>(cfg.eval_points, 10000), 100,
                                            std::min<std::size_t>(cfg.eval_points, 512), cfg.seed);
            results.insert(results.end(), r.begin(), r.end());
        }
        if (suite == "lemma4" || suite == "all") {
            auto r = verify::lemma4_battery(*ap, std::min<std::size_t>(cfg.eval_points, 10000), cfg.seed);
            results.insert(results.end(), r.begin(), r.end());
        }
        if (suite == "theorem1" || suite == "all") {
            auto r = verify::theorem1_battery(*ap, cfg.eval_points, cfg.seed);
            results.insert(results.end(), r.begin(), r.end());
        }
        if (results.empty()) throw ConfigError("verify: unknown suite '" + suite + "'");

        nlohmann::json out;
        out["schema_version"] = 1;
        out["suite"] = suite;
        out["config"] = cfg.to_json();
        nlohmann::json props = nlohmann::json::array();
        for (const auto& r : results) props.push_back(r.to_json());
        out["properties"] = props;
        out["pass"] = verify::all_pass(results);
        fs::create_directories(cfg.out_dir);
        {
            std::ofstream f(fs::path(cfg.out_dir) / ("verify_" + suite + ".json"), std::ios::binary);
            f << out.dump(2) << "\n";
        }
        for (const auto& r : results)
            log << (r.pass() ? "  ok  " : " FAIL ") << r.name << "  (checked " << r.checked
                << ", violations " << r.violations << ", worst margin " << r.worst_margin << ")\n";
        return verify::all_pass(results) ? kExitOk : kExitInvariant;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CapacityError& e) {
        log << "capacity error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const InvariantViolation& e) {
        log << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    }
}

}  // namespace gapx
