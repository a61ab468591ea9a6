#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapx/approximant.hpp"

namespace gapx {

// Exit codes of the batch runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCapacity = 3;
inline constexpr int kExitInvariant = 4;

struct RunConfig {
    int schema_version = 1;
    std::uint64_t seed = 20240817;
    int workers = 0;

    int dim = 2;
    double R = 1.5;
    DomainShape shape = DomainShape::ball;

    // q: builtin name or explicit components of p
    std::string q_builtin = "euclidean4";  // euclidean4 | quartic_sum | custom
    std::vector<PComponent> q_components;

    // target: builtin name (+ params) or tabulated samples
    std::string target_name = "x1_sin_2x2";  // constant | coordinate | x1_sin_2x2 | table
    double constant_value = 0.0;
    std::vector<double> table_points;  // row-major count x dim
    std::vector<double> table_values;
    std::optional<double> lipschitz_override;
    std::optional<std::pair<double, double>> bounds_override;

    double epsilon = 0.2;
    std::size_t net_cap = 200000;
    GateMode gate_mode = GateMode::sigmoid;
    NuBackend backend = NuBackend::layercake;
    int mc_samples = 100000;
    double root_tol = 1e-12;
    double quad_tol = 1e-9;

    std::size_t eval_points = 2000;
    std::string out_dir = "out";

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);
    nlohmann::json to_json() const;
};

Domain make_domain(const RunConfig& cfg);
SepPolyQ make_q(const RunConfig& cfg);
TargetFunction make_target(const RunConfig& cfg, const Domain& dom);
Approximant build_pipeline(const RunConfig& cfg);

// Builds the pipeline, evaluates the grid, writes <out>/report.json and
// <out>/points.csv. Returns kExitOk iff sup error < eps and every invariant
// holds; config/capacity/invariant failures map to the documented codes.
int run_experiment(const RunConfig& cfg, std::ostream& log);

// Runs the named invariant battery (gauge | lemma2 | lemma3 | lemma4 |
// theorem1 | all) and writes <out>/verify_<suite>.json.
int verify_suite(const RunConfig& cfg, const std::string& suite, std::ostream& log);

}  // namespace gapx
