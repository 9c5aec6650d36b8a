#pragma once

// Metric variations of the harmonic extension and of the DtN operator.
//
// With u the harmonic extension of f and the full stiffness split into
// interior/boundary blocks, the variation of u in direction h solves
//     K_ii v_i = -(DK u)_i,   v = 0 on the boundary,
// and the exact derivative of the discrete map g -> M_b(g)^{-1} S(g) f is
//     M_b dLf = (DK u)_b + (K v)_b - DM_b (Lambda f).
// The three terms are recorded separately: the stiffness-boundary and
// interior-flux parts carry the v_n - h(grad u, n) content of the continuum
// formula, the measure term carries the (u_n/2) h(n,n) / boundary-measure
// content. The continuum coordinate formula itself is implemented in
// dg_laplacian_* for analytic manufactured fields (any dimension), and
// finite_difference_dtn is the fully re-assembled central-difference oracle.

#include <Eigen/Dense>
#include <memory>

#include "steklov/assembly.hpp"
#include "steklov/steklov_op.hpp"

namespace steklov {

/// One (mesh, metric) context: assembled K and M_b plus the factorizations
/// reused by every solve.
struct SteklovSetup {
    Mesh mesh;
    MetricField metric;
    int quad_order = 2;
    std::shared_ptr<const DirichletSolver> solver;
    BoundaryMassMatrix Mb;
    Eigen::LLT<Eigen::MatrixXd> Mb_llt;

    SteklovSetup(Mesh mesh_in, MetricField metric_in, int quad_order_in = 2,
                 BoundaryMassOptions mass_options = {});

    Eigen::VectorXd mb_solve(const Eigen::VectorXd& rhs) const;
    /// Lambda f = M_b^{-1} (K u)_b with u the harmonic extension of f.
    Eigen::VectorXd dtn_apply(const Eigen::VectorXd& f) const;
    int n_boundary() const { return solver->dofs().n_boundary(); }
};

/// DK and DM_b for one direction h, assembled once and reused.
struct VariationWorkspace {
    StiffnessMatrix DK;
    BoundaryMassMatrix DMb;
};

VariationWorkspace make_variation_workspace(const SteklovSetup& setup,
                                            const PerturbationDirection& h);

/// v = D_g u: solves K_ii v_i = -(DK u)_i with v = 0 on the boundary.
InteriorField variation_of_harmonic_extension(const SteklovSetup& setup,
                                              const PerturbationDirection& h,
                                              const Eigen::VectorXd& f);

/// Raw boundary load of D(S f) = (DK u)_b + (K v)_b; optionally returns v.
Eigen::VectorXd ds_apply(const SteklovSetup& setup, const VariationWorkspace& ws,
                         const Eigen::VectorXd& f, InteriorField* v_out = nullptr);

struct VariationResult {
    InteriorField v;            // zero on all boundary DOFs
    Eigen::VectorXd dLf;        // (D_g Lambda)(h) f, boundary nodal values
    Eigen::VectorXd lambda_f;   // Lambda f of the base pencil
    // dLf = term_stiffness + term_interior + term_measure, summed in this order.
    Eigen::VectorXd term_stiffness;  // M_b^{-1} (DK u)_b
    Eigen::VectorXd term_interior;   // M_b^{-1} (K v)_b
    Eigen::VectorXd term_measure;    // -M_b^{-1} DM_b (Lambda f)
    PerturbationDirection direction;
};

VariationResult dtn_variation(const SteklovSetup& setup, const PerturbationDirection& h,
                              const Eigen::VectorXd& f);

// --- continuum coordinate formulas (dimension-generic, pointwise) -----------

/// Laplace-Beltrami of an analytic field at a point:
/// g^{ij} u_ij + d_i(g^{ij}) u_j + 1/2 tr_g(d_i g) g^{ij} u_j.
double laplace_beltrami_point(const Eigen::MatrixXd& g, const std::vector<Eigen::MatrixXd>& dg,
                              const Eigen::VectorXd& grad_u, const Eigen::MatrixXd& hess_u);

/// D_g(Delta)u by the general coordinate expansion, with h^{ij} the components
/// of D(g^{-1}) = -g^{-1} h g^{-1}:
/// h^{ij} u_ij + d_i(h^{ij}) u_j + 1/2 tr(h^{-1} d_i g + g^{-1} d_i h) g^{ij} u_j
///            + 1/2 tr(g^{-1} d_i g) h^{ij} u_j.
double dg_laplacian_general(const Eigen::MatrixXd& g, const std::vector<Eigen::MatrixXd>& dg,
                            const Eigen::MatrixXd& h, const std::vector<Eigen::MatrixXd>& dh,
                            const Eigen::VectorXd& grad_u, const Eigen::MatrixXd& hess_u);

/// Conformal simplification -(sigma Delta_g u + (1 - n/2) <grad sigma, grad u>_g).
double dg_laplacian_conformal(const Eigen::MatrixXd& g, const std::vector<Eigen::MatrixXd>& dg,
                              double sigma, const Eigen::VectorXd& grad_sigma,
                              const Eigen::VectorXd& grad_u, const Eigen::MatrixXd& hess_u);

/// 2-d convenience wrapper over descriptor fields and an analytic u.
double evaluate_dg_laplacian(const MetricField& metric, const PerturbationDirection& h,
                             const ScalarExpr& u, const Vec2& point);

// --- identities and oracles --------------------------------------------------

struct DensityIdentityResult {
    double lhs = 0.0;       // psi^T M_b (D_g Lambda)(sigma g) f
    double rhs = 0.0;       // -(lambda/2) * psi^T M_b^sigma f   (n = 2)
    double residual = 0.0;  // |lhs - rhs|
    double scale = 0.0;     // lambda * ||psi||_Mb * ||f||_Mb
};

/// The n = 2 conformal pairing identity for an eigenpair (lambda, f):
/// psi^T M_b (D_g Lambda)(sigma g) f = -(lambda/2) psi^T M_b^sigma f, with
/// test function psi and conformal direction sigma. lambda must be > 0.
DensityIdentityResult density_identity_residual(const SteklovSetup& setup, double lambda,
                                                const Eigen::VectorXd& f,
                                                const Eigen::VectorXd& psi,
                                                const ScalarExpr& sigma);

/// Central difference [Lambda(g+th) f - Lambda(g-th) f] / (2t) over fully
/// re-assembled operators. Throws StepTooLargeError when g +/- t h is not SPD.
Eigen::VectorXd finite_difference_dtn(const Mesh& mesh, const MetricField& metric,
                                      const PerturbationDirection& h, const Eigen::VectorXd& f,
                                      double t, int quad_order = 2);

}  // namespace steklov
