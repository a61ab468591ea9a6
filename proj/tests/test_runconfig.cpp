#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gapx/errors.hpp"
#include "gapx/runconfig.hpp"

using namespace gapx;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_interval_config() {
    return nlohmann::json{
        {"schema_version", 1},
        {"seed", 4242},
        {"domain", {{"dim", 1}, {"R", 2.0}, {"shape", "box"}}},
        {"q", {{"builtin", "euclidean4"}}},
        {"target", {{"builtin", "coordinate"}}},
        {"epsilon", 0.3},
        {"eval_points", 64},
        {"out_dir", "test_out/run_a"},
    };
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing echoes fields and rejects junk") {
    auto cfg = RunConfig::from_json(tiny_interval_config());
    CHECK(cfg.dim == 1);
    CHECK(cfg.shape == DomainShape::box);
    CHECK(cfg.epsilon == doctest::Approx(0.3));
    CHECK(cfg.seed == 4242);
    auto echo = cfg.to_json();
    CHECK(echo["domain"]["shape"] == "box");
    CHECK(echo["target"]["builtin"] == "coordinate");
    CHECK(echo["nu_backend"] == "layercake");

    auto bad = tiny_interval_config();
    bad["domain"]["shape"] = "torus";
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);
    auto badq = tiny_interval_config();
    badq["q"] = {{"builtin", "octic"}};
    CHECK_THROWS_AS(RunConfig::from_json(badq), ConfigError);
}

TEST_CASE("run_experiment writes report and point table, exit 0") {
    auto cfg = RunConfig::from_json(tiny_interval_config());
    std::ostringstream log;
    int rc = run_experiment(cfg, log);
    INFO(log.str());
    CHECK(rc == kExitOk);
    CHECK(fs::exists("test_out/run_a/report.json"));
    CHECK(fs::exists("test_out/run_a/points.csv"));

    std::ifstream rj("test_out/run_a/report.json");
    nlohmann::json rep;
    rj >> rep;
    CHECK(rep["pass"] == true);
    CHECK(rep["results"]["sup_err"].get<double>() < 0.3);
    CHECK(rep["schema_version"] == 1);
    CHECK(rep["config"]["seed"] == 4242);
    CHECK(rep["derived"]["gammas"].size() == 3);

    // CSV: header + one line per point
    std::string csv = slurp("test_out/run_a/points.csv");
    std::size_t lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 64 + 1);
}

TEST_CASE("identical config and seed give byte-identical point tables") {
    auto cfg = RunConfig::from_json(tiny_interval_config());
    std::ostringstream log;
    cfg.out_dir = "test_out/repro_1";
    cfg.workers = 1;
    REQUIRE(run_experiment(cfg, log) == kExitOk);
    cfg.out_dir = "test_out/repro_2";
    cfg.workers = 2;  // worker count must not change the bytes
    REQUIRE(run_experiment(cfg, log) == kExitOk);
    CHECK(slurp("test_out/repro_1/points.csv") == slurp("test_out/repro_2/points.csv"));
}

TEST_CASE("exit codes: config error 2, capacity error 3") {
    auto bad = tiny_interval_config();
    bad["domain"]["R"] = 0.5;  // must exceed 1
    std::ostringstream log;
    auto cfg_bad = RunConfig::from_json(bad);
    CHECK(run_experiment(cfg_bad, log) == kExitConfig);

    auto cap = tiny_interval_config();
    cap["domain"] = {{"dim", 2}, {"R", 1.5}, {"shape", "ball"}};
    cap["epsilon"] = 0.02;
    cap["net_cap"] = 50000;
    auto cfg_cap = RunConfig::from_json(cap);
    CHECK(run_experiment(cfg_cap, log) == kExitCapacity);
}

TEST_CASE("tabulated target with declared Lipschitz constant") {
    nlohmann::json j = tiny_interval_config();
    j["target"] = {{"builtin", "table"},
                   {"points", {{-0.5}, {0.0}, {0.5}}},
                   {"values", {0.1, 0.0, 0.1}},
                   {"lipschitz", 1.0}};
    j["epsilon"] = 0.35;
    j["out_dir"] = "test_out/table";
    auto cfg = RunConfig::from_json(j);
    Domain dom = make_domain(cfg);
    auto target = make_target(cfg, dom);
    // the extension interpolates the samples
    std::vector<double> p{-0.5};
    CHECK(target.f(p) == doctest::Approx(0.1).epsilon(1e-12));
    p[0] = 0.0;
    CHECK(target.f(p) == doctest::Approx(0.0).epsilon(1e-12));
    std::ostringstream log;
    CHECK(run_experiment(cfg, log) == kExitOk);

    // inconsistent table data is rejected
    j["target"]["values"] = {0.9, 0.0, 0.9};  // slope 1.8 > declared 1.0
    auto cfg_bad = RunConfig::from_json(j);
    CHECK_THROWS_AS(make_target(cfg_bad, dom), ConfigError);
}

TEST_CASE("verify_suite lemma2 and theorem1 pass on the tiny config") {
    auto cfg = RunConfig::from_json(tiny_interval_config());
    cfg.out_dir = "test_out/verify";
    std::ostringstream log;
    CHECK(verify_suite(cfg, "lemma2", log) == kExitOk);
    CHECK(fs::exists("test_out/verify/verify_lemma2.json"));
    CHECK(verify_suite(cfg, "theorem1", log) == kExitOk);
    CHECK(verify_suite(cfg, "nosuchsuite", log) == kExitConfig);
}
