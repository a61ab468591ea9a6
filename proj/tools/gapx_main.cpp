#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gapx/errors.hpp"
#include "gapx/runconfig.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gapx: Lipschitz analytic approximants via gauge quotients"};
    app.require_subcommand(1);

    std::string config_path, suite = "all", out_dir, backend;
    std::uint64_t seed = 0;
    int workers = -1, mc_samples = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "run configuration (JSON)")->required();
        cmd->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--workers", workers, "worker thread count (0 = hardware)");
        cmd->add_option("--out-dir", out_dir, "override the output directory");
        cmd->add_option("--backend", backend, "nu backend: layercake | mc")
            ->check(CLI::IsMember({"layercake", "mc"}));
        cmd->add_option("--mc-samples", mc_samples, "Monte Carlo sample count");
    };

    CLI::App* run = app.add_subcommand("run", "build the approximant and write report + point table");
    add_common(run);

    CLI::App* verify = app.add_subcommand("verify", "run an invariant battery");
    add_common(verify);
    verify->add_option("--suite", suite, "gauge | lemma2 | lemma3 | lemma4 | theorem1 | all")
        ->check(CLI::IsMember({"gauge", "lemma2", "lemma3", "lemma4", "theorem1", "all"}));

    CLI11_PARSE(app, argc, argv);

    gapx::RunConfig cfg;
    try {
        cfg = gapx::RunConfig::from_file(config_path);
    } catch (const gapx::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return gapx::kExitConfig;
    }
    if (seed_set) cfg.seed = seed;
    if (workers >= 0) cfg.workers = workers;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!backend.empty()) cfg.backend = backend == "mc" ? gapx::NuBackend::montecarlo : gapx::NuBackend::layercake;
    if (mc_samples > 0) cfg.mc_samples = mc_samples;

    if (run->parsed()) return gapx::run_experiment(cfg, std::cout);
    return gapx::verify_suite(cfg, suite, std::cout);
}
