#pragma once

// Experiment configuration and batch runners behind the CLI. A config is a
// single JSON document; unknown keys are rejected and parsing round-trips
// losslessly. Every run is deterministic given (config, seed): outputs are
// byte-identical across reruns and thread counts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steklov/expr.hpp"
#include "steklov/geometry.hpp"

#include "json.hpp"

namespace steklov {

struct DomainConfig {
    enum class Kind : std::uint8_t { Disk, Annulus, MeshFile };
    Kind kind = Kind::Disk;
    double radius = 1.0;   // disk
    double r_inner = 0.5;  // annulus
    double r_outer = 1.0;
    double target_h = 0.1;
    std::string path;  // mesh file

    Mesh build() const;
};

struct MetricConfig {
    enum class Kind : std::uint8_t { Euclidean, Conformal, General };
    Kind kind = Kind::Euclidean;
    double scale = 1.0;
    ScalarExpr phi;
    ScalarExpr g11, g12, g22;

    MetricField build() const;
};

struct PerturbationConfig {
    enum class Kind : std::uint8_t { ConformalRandom, Conformal, General };
    Kind kind = Kind::ConformalRandom;
    std::uint64_t seed = 1;
    int modes = 3;
    double amplitude = 0.1;
    ScalarExpr sigma;
    ScalarExpr h11, h12, h22;

    /// For Conformal/General kinds; ConformalRandom is materialized per trial.
    PerturbationDirection build() const;
};

struct Tolerances {
    double gap_tol = 1e-6;
    double zero_tol = 1e-6;
    double deriv_tol = 1e-3;
    double second_deriv_tol = 1e-3;
    double vanish_tol = 1e-8;
    double arc_fraction = 0.05;
    double conformal_rel = 1e-10;  // 2d conformal closed-form identity
    double density_rel = 1e-10;    // conformal pairing identity
    double fd_rel = 1e-6;          // FD mismatch floor at the smallest step
};

struct ExperimentConfig {
    std::string experiment;  // spectrum | variation-check | split | scan | wucp | oracle
    DomainConfig domain;
    MetricConfig metric;
    int refine_levels = 0;
    int eigen_count = 12;
    int quad_order = 2;
    int trials = 1;
    int scan_m = 10;  // eigenfunctions scanned per trial
    std::vector<double> steps;
    int cluster_index = -1;
    double fd_step = 1e-4;
    bool export_operators = false;  // write K and M_b as triplet text files
    PerturbationConfig perturbation;
    Tolerances tol;
    std::string output = "out";
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_file(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct RunOptions {
    std::string out_override;
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
    bool verbose = false;
};

/// Executes the configured experiment and writes its artifacts. Returns the
/// process exit code: 0 success, 1 tolerance violation. Config errors and
/// solver failures are thrown (the CLI maps them to exit codes 2 and 3).
int run_experiment(const ExperimentConfig& config, const RunOptions& options);

}  // namespace steklov
