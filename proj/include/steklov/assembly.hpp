#pragma once

// Metric-dependent P1 forms and their exact directional derivatives.
//
// Stiffness:      K_ab = int_M sqrt|g| g^{ij} d_i phi_a d_j phi_b dx
// Boundary mass:  (M_b)_ab = int_bdry w(x) phi_a phi_b dA,  dA = sqrt(g(tau,tau)) dl
//
// The derivatives DK and DM_b are assembled analytically from the descriptor
// fields, using d/dt[sqrt|g_t| g_t^{-1}] = sqrt|g| (tr_g(h)/2 g^{-1} - g^{-1} h g^{-1})
// and d/dt sqrt(g_t(tau,tau)) = h(tau,tau) / (2 sqrt(g(tau,tau))). They are the
// exact derivatives of the assembled discrete objects; finite differences of
// the assembly exist only as a test oracle.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <optional>
#include <vector>

#include "steklov/geometry.hpp"

namespace steklov {

using SparseMat = Eigen::SparseMatrix<double>;

/// Boundary DOFs come first in loop order (as given by Mesh::boundary_vertices),
/// which is also the row/column ordering of every boundary operator.
struct DofPartition {
    std::vector<int> boundary;          // vertex id per boundary DOF
    std::vector<int> interior;          // vertex id per interior DOF
    std::vector<int> vertex_to_boundary;  // -1 if interior
    std::vector<int> vertex_to_interior;  // -1 if boundary

    static DofPartition build(const Mesh& mesh);
    int n_boundary() const { return static_cast<int>(boundary.size()); }
    int n_interior() const { return static_cast<int>(interior.size()); }
};

struct StiffnessMatrix {
    SparseMat K;  // full (n_vertices x n_vertices), symmetric
    DofPartition dofs;
    int quad_order = 2;
};

struct BoundaryMassMatrix {
    Eigen::MatrixXd M;  // n_boundary x n_boundary, boundary-DOF ordering
    bool lumped = false;
    bool weighted = false;
};

struct InteriorField {
    Eigen::VectorXd values;  // all vertex DOFs
    bool harmonic = false;
    double interior_residual = 0.0;  // ||K_ii u_i + K_ib u_b|| / ||K_ib u_b||
};

StiffnessMatrix assemble_stiffness(const Mesh& mesh, const MetricField& metric,
                                   int quad_order = 2);

struct BoundaryMassOptions {
    bool lumped = false;
};

BoundaryMassMatrix assemble_boundary_mass(const Mesh& mesh, const MetricField& metric,
                                          const std::optional<ScalarExpr>& weight = std::nullopt,
                                          const BoundaryMassOptions& options = {});

/// DK: exact derivative of assemble_stiffness at (g, h). For conformal h in 2d
/// the integrand cancels identically, so DK vanishes to rounding.
StiffnessMatrix assemble_stiffness_derivative(const Mesh& mesh, const MetricField& metric,
                                              const PerturbationDirection& h, int quad_order = 2);

/// DM_b: exact derivative of assemble_boundary_mass. For conformal h this is
/// 1/2 * (sigma-weighted mass) with the same quadrature.
BoundaryMassMatrix assemble_boundary_mass_derivative(const Mesh& mesh, const MetricField& metric,
                                                     const PerturbationDirection& h,
                                                     const BoundaryMassOptions& options = {});

/// Holds the SPD factorization of K_ii for reuse across right-hand sides.
class DirichletSolver {
  public:
    explicit DirichletSolver(StiffnessMatrix K);

    const StiffnessMatrix& stiffness() const { return K_; }
    const DofPartition& dofs() const { return K_.dofs; }
    const SparseMat& K_ii() const { return K_ii_; }
    const SparseMat& K_ib() const { return K_ib_; }
    const SparseMat& K_bb() const { return K_bb_; }

    /// Solves K_ii x = rhs.
    Eigen::VectorXd solve_interior(const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd solve_interior(const Eigen::MatrixXd& rhs) const;

    /// (K u)_b for a full DOF vector u.
    Eigen::VectorXd boundary_load(const Eigen::VectorXd& u_full) const;

  private:
    StiffnessMatrix K_;
    SparseMat K_ii_, K_ib_, K_bb_;
    Eigen::SimplicialLDLT<SparseMat> factorization_;
};

/// Discrete Dirichlet solve: u = f on the boundary, K_ii u_i = -K_ib f inside.
InteriorField harmonic_extension(const DirichletSolver& solver, const Eigen::VectorXd& f);

/// Scatter/gather between boundary-DOF vectors and full vectors.
Eigen::VectorXd boundary_part(const DofPartition& dofs, const Eigen::VectorXd& full);
Eigen::VectorXd full_from_boundary(const DofPartition& dofs, const Eigen::VectorXd& f_boundary);

}  // namespace steklov
