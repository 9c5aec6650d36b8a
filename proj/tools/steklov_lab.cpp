// Command-line driver: runs one configured experiment and writes its
// artifacts. Exit codes: 0 success, 1 tolerance violation, 2 config error,
// 3 solver/runtime error.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "steklov/errors.hpp"
#include "steklov/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"steklov_lab: Steklov eigenproblem and metric-variation experiments"};

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    bool verbose = false;

    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", seed, "seed override");
    app.add_option("--threads", threads, "worker threads for trials/solves")->default_val(1);
    app.add_flag("--verbose", verbose, "progress notes on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const steklov::ExperimentConfig config = steklov::parse_config_file(config_path);
        steklov::RunOptions options;
        options.out_override = out_dir;
        if (seed_opt->count() > 0) options.seed_override = seed;
        options.threads = threads;
        options.verbose = verbose;
        return steklov::run_experiment(config, options);
    } catch (const steklov::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
