#pragma once

#include <stdexcept>
#include <string>

namespace steklov {

/// Bad experiment configuration (unknown keys, missing fields, malformed files).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid mathematical input: non-SPD metric, degenerate radii, broken mesh.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested mesh would exceed the configured vertex budget.
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Factorization or eigensolver failure.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// A finite-difference step pushed the metric out of the SPD cone.
struct StepTooLargeError : std::runtime_error {
    explicit StepTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

/// An operation precondition does not hold (e.g. resolvent input not orthogonal
/// to the excluded eigenspace).
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace steklov
