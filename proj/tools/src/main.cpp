#include "lwucb_cli/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace lwucb::cli;

    CLI::App app{"Gaussian-process bandit experiments with likelihood-weighted UCB"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "lwucb 0.1.0");

    GlobalOptions opts;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool quiet = false;
    app.add_option("--jobs,-j", opts.jobs, "Concurrent trials")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the experiment file)");
    auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides the experiment file)");
    app.add_flag("--quiet,-q", quiet, "Only print warnings and errors");

    std::string spec_path;
    auto* run = app.add_subcommand("run", "Run every acquisition in the experiment file and write result bundles");
    run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();

    auto* bench = app.add_subcommand("bench-runtime", "Time one loop iteration per acquisition");
    bench->add_option("spec", spec_path, "Experiment spec (JSON)")->required();

    std::vector<int> values;
    auto* sweep = app.add_subcommand("sweep-gmm", "Rerun the experiment file's LW-UCB entry for several n_gmm values");
    sweep->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
    sweep->add_option("--values", values, "Comma-separated n_gmm values")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidation;
    }

    spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);
    if (*seed_opt)
        opts.seed = seed;
    if (*out_opt)
        opts.out = out_dir;

    if (*run)
        return cmd_run(spec_path, opts, std::cout, std::cerr);
    if (*bench)
        return cmd_bench_runtime(spec_path, opts, std::cout, std::cerr);
    return cmd_sweep_gmm(spec_path, values, opts, std::cout, std::cerr);
}
