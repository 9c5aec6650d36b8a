#pragma once

// The discrete Dirichlet-to-Neumann operator and its spectrum.
//
// S = K_bb - K_bi K_ii^{-1} K_ib is the Schur complement onto the boundary
// DOFs; M_b^{-1} S f is the weak normal derivative of the harmonic extension
// of f. Steklov eigenpairs solve the symmetric-definite pencil
// S psi = lambda M_b psi with M_b-orthonormal eigenvectors.

#include <Eigen/Dense>
#include <memory>
#include <utility>
#include <vector>

#include "steklov/assembly.hpp"

namespace steklov {

struct DtnOperator {
    Eigen::MatrixXd S;  // dense, symmetric, boundary-DOF ordering
    BoundaryMassMatrix Mb;
    std::shared_ptr<const DirichletSolver> solver;

    /// Weak DtN application M_b^{-1} (S f).
    Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
};

/// Forms S by #boundary interior solves against the shared factorization.
/// The solves may be chunked over threads; the result is identical for any
/// thread count.
DtnOperator dtn_schur(std::shared_ptr<const DirichletSolver> solver,
                      BoundaryMassMatrix Mb, int threads = 1);

using ClusterRange = std::pair<int, int>;  // [begin, end)

/// Maximal runs of eigenvalues with lambda_{i+1} - lambda_i <= gap_tol * max(1, lambda_i).
std::vector<ClusterRange> cluster_multiplicities(const Eigen::VectorXd& eigenvalues,
                                                 double gap_tol);

struct SteklovSpectrum {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // one column per eigenvalue, M_b-orthonormal
    std::vector<ClusterRange> clusters;
    double gap_tol = 1e-6;
    Eigen::MatrixXd Mb;                  // boundary mass of the pencil
    double max_pencil_residual = 0.0;    // max_n ||S psi - lambda Mb psi|| / (||S||_inf ||psi||)
    int full_dimension = 0;              // boundary DOF count of the pencil

    bool is_complete() const { return eigenvalues.size() == full_dimension; }
    /// Eigenvalues below this are treated as the zero (constant) modes.
    double zero_threshold() const;
    Eigen::VectorXd mb_apply(const Eigen::VectorXd& f) const { return Mb * f; }
    double mb_norm(const Eigen::VectorXd& f) const;
};

/// First `count` eigenpairs of (S, M_b), sorted ascending. Within a numerical
/// cluster the eigenvector basis is fixed by a deterministic pivot-node
/// rotation so reruns (and basis-degenerate solves) are reproducible.
SteklovSpectrum steklov_eigs(const DtnOperator& dtn, int count, double gap_tol = 1e-6);

/// R_lambda w = sum_{lambda_n > 0, n outside the cluster of lambda}
///              (psi_n^T M_b w)/(lambda_n - lambda) psi_n.
/// Requires w to be M_b-orthogonal to the lambda-cluster and to the constant
/// modes; throws PreconditionError otherwise.
Eigen::VectorXd resolvent_apply(const SteklovSpectrum& spectrum, double lambda,
                                const Eigen::VectorXd& w, double orth_tol = 1e-8);

enum class TraceScheme { Auto, FiniteDifference, Fourier };

struct BoundaryTrace {
    int loop = 0;
    double loop_length = 0.0;
    std::vector<double> s;       // cyclic arclength coordinates
    std::vector<double> values;  // f(s_j)
    std::vector<double> d1;      // f'(s_j)
    std::vector<double> d2;      // f''(s_j)
    // provenance, filled by extract_trace and the experiment drivers
    int eigen_index = -1;
    double lambda = 0.0;
};

/// Periodic arclength derivatives of nodal data: 5-point finite differences on
/// the (possibly nonuniform) cyclic grid by default, exact Fourier
/// differentiation when the nodes are uniform in arclength.
void trace_derivatives(const std::vector<double>& s, double length,
                       const std::vector<double>& values, TraceScheme scheme,
                       std::vector<double>& d1, std::vector<double>& d2);

/// Boundary trace of eigenvector `index` on every loop, with arclength
/// derivative arrays.
std::vector<BoundaryTrace> extract_trace(const SteklovSpectrum& spectrum, int index,
                                         const Mesh& mesh, const MetricField& metric,
                                         TraceScheme scheme = TraceScheme::Auto);

}  // namespace steklov
