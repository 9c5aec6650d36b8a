#include "steklov/variation.hpp"

#include <cmath>

#include "steklov/errors.hpp"

namespace steklov {

SteklovSetup::SteklovSetup(Mesh mesh_in, MetricField metric_in, int quad_order_in,
                           BoundaryMassOptions mass_options)
    : mesh(std::move(mesh_in)), metric(std::move(metric_in)), quad_order(quad_order_in) {
    solver = std::make_shared<DirichletSolver>(assemble_stiffness(mesh, metric, quad_order));
    Mb = assemble_boundary_mass(mesh, metric, std::nullopt, mass_options);
    Mb_llt.compute(Mb.M);
    if (Mb_llt.info() != Eigen::Success)
        throw SolverError("SteklovSetup: boundary mass factorization failed");
}

Eigen::VectorXd SteklovSetup::mb_solve(const Eigen::VectorXd& rhs) const {
    return Mb_llt.solve(rhs);
}

Eigen::VectorXd SteklovSetup::dtn_apply(const Eigen::VectorXd& f) const {
    const InteriorField u = harmonic_extension(*solver, f);
    return mb_solve(solver->boundary_load(u.values));
}

VariationWorkspace make_variation_workspace(const SteklovSetup& setup,
                                            const PerturbationDirection& h) {
    VariationWorkspace ws;
    ws.DK = assemble_stiffness_derivative(setup.mesh, setup.metric, h, setup.quad_order);
    ws.DMb = assemble_boundary_mass_derivative(setup.mesh, setup.metric, h,
                                               BoundaryMassOptions{setup.Mb.lumped});
    return ws;
}

namespace {

InteriorField solve_variation(const SteklovSetup& setup, const VariationWorkspace& ws,
                              const InteriorField& u) {
    const auto& dofs = setup.solver->dofs();
    const Eigen::VectorXd DKu = ws.DK.K * u.values;
    Eigen::VectorXd rhs(dofs.n_interior());
    for (int j = 0; j < dofs.n_interior(); ++j) rhs[j] = -DKu[dofs.interior[j]];
    const Eigen::VectorXd vi = setup.solver->solve_interior(rhs);

    InteriorField v;
    v.values = Eigen::VectorXd::Zero(u.values.size());
    for (int j = 0; j < dofs.n_interior(); ++j) v.values[dofs.interior[j]] = vi[j];
    v.harmonic = false;
    const double rhs_norm = rhs.norm();
    if (rhs_norm > 0.0)
        v.interior_residual = (setup.solver->K_ii() * vi - rhs).norm() / rhs_norm;
    return v;
}

}  // namespace

InteriorField variation_of_harmonic_extension(const SteklovSetup& setup,
                                              const PerturbationDirection& h,
                                              const Eigen::VectorXd& f) {
    const VariationWorkspace ws = make_variation_workspace(setup, h);
    const InteriorField u = harmonic_extension(*setup.solver, f);
    return solve_variation(setup, ws, u);
}

Eigen::VectorXd ds_apply(const SteklovSetup& setup, const VariationWorkspace& ws,
                         const Eigen::VectorXd& f, InteriorField* v_out) {
    const InteriorField u = harmonic_extension(*setup.solver, f);
    const InteriorField v = solve_variation(setup, ws, u);
    const auto& dofs = setup.solver->dofs();
    const Eigen::VectorXd DKu = ws.DK.K * u.values;
    const Eigen::VectorXd Kv = setup.solver->stiffness().K * v.values;
    Eigen::VectorXd load(dofs.n_boundary());
    for (int j = 0; j < dofs.n_boundary(); ++j)
        load[j] = DKu[dofs.boundary[j]] + Kv[dofs.boundary[j]];
    if (v_out) *v_out = v;
    return load;
}

VariationResult dtn_variation(const SteklovSetup& setup, const PerturbationDirection& h,
                              const Eigen::VectorXd& f) {
    const VariationWorkspace ws = make_variation_workspace(setup, h);
    const auto& dofs = setup.solver->dofs();

    const InteriorField u = harmonic_extension(*setup.solver, f);
    const InteriorField v = solve_variation(setup, ws, u);

    const Eigen::VectorXd DKu = ws.DK.K * u.values;
    const Eigen::VectorXd Kv = setup.solver->stiffness().K * v.values;
    Eigen::VectorXd load_stiffness(dofs.n_boundary()), load_interior(dofs.n_boundary());
    for (int j = 0; j < dofs.n_boundary(); ++j) {
        load_stiffness[j] = DKu[dofs.boundary[j]];
        load_interior[j] = Kv[dofs.boundary[j]];
    }

    VariationResult out;
    out.v = v;
    out.direction = h;
    out.lambda_f = setup.mb_solve(setup.solver->boundary_load(u.values));
    out.term_stiffness = setup.mb_solve(load_stiffness);
    out.term_interior = setup.mb_solve(load_interior);
    out.term_measure = setup.mb_solve(-(ws.DMb.M * out.lambda_f));
    out.dLf = out.term_stiffness + out.term_interior + out.term_measure;
    return out;
}

// --- continuum coordinate formulas -------------------------------------------

double laplace_beltrami_point(const Eigen::MatrixXd& g, const std::vector<Eigen::MatrixXd>& dg,
                              const Eigen::VectorXd& grad_u, const Eigen::MatrixXd& hess_u) {
    const int n = static_cast<int>(g.rows());
    const Eigen::MatrixXd gi = g.inverse();
    double value = gi.cwiseProduct(hess_u).sum();
    const Eigen::VectorXd gi_grad = gi * grad_u;
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXd dgi = -(gi * dg[i] * gi);
        value += dgi.row(i).dot(grad_u);
        value += 0.5 * (gi * dg[i]).trace() * gi_grad[i];
    }
    return value;
}

double dg_laplacian_general(const Eigen::MatrixXd& g, const std::vector<Eigen::MatrixXd>& dg,
                            const Eigen::MatrixXd& h, const std::vector<Eigen::MatrixXd>& dh,
                            const Eigen::VectorXd& grad_u, const Eigen::MatrixXd& hess_u) {
    const int n = static_cast<int>(g.rows());
    const Eigen::MatrixXd gi = g.inverse();
    const Eigen::MatrixXd H = -(gi * h * gi);  // components of D(g^{-1})

    double value = H.cwiseProduct(hess_u).sum();
    const Eigen::VectorXd gi_grad = gi * grad_u;
    const Eigen::VectorXd H_grad = H * grad_u;
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXd dgi = -(gi * dg[i] * gi);
        // d_i H = -(d_i gi) h gi - gi (d_i h) gi - gi h (d_i gi)
        const Eigen::MatrixXd dH = -(dgi * h * gi) - (gi * dh[i] * gi) - (gi * h * dgi);
        value += dH.row(i).dot(grad_u);
        value += 0.5 * ((H * dg[i]).trace() + (gi * dh[i]).trace()) * gi_grad[i];
        value += 0.5 * (gi * dg[i]).trace() * H_grad[i];
    }
    return value;
}

double dg_laplacian_conformal(const Eigen::MatrixXd& g, const std::vector<Eigen::MatrixXd>& dg,
                              double sigma, const Eigen::VectorXd& grad_sigma,
                              const Eigen::VectorXd& grad_u, const Eigen::MatrixXd& hess_u) {
    const double n = static_cast<double>(g.rows());
    const Eigen::MatrixXd gi = g.inverse();
    const double lap = laplace_beltrami_point(g, dg, grad_u, hess_u);
    const double pairing = grad_sigma.dot(gi * grad_u);
    return -(sigma * lap + (1.0 - 0.5 * n) * pairing);
}

double evaluate_dg_laplacian(const MetricField& metric, const PerturbationDirection& h,
                             const ScalarExpr& u, const Vec2& point) {
    const Mat2 g = metric.eval(point);
    const auto dg2 = metric.eval_derivatives(point);
    const Mat2 ht = h.tensor_at(metric, point);
    const auto dh2 = h.tensor_derivatives(metric, point);
    const std::vector<Eigen::MatrixXd> dg{dg2[0], dg2[1]};
    const std::vector<Eigen::MatrixXd> dh{dh2[0], dh2[1]};
    return dg_laplacian_general(g, dg, ht, dh, u.gradient(point), u.hessian(point));
}

// --- identities and oracles ---------------------------------------------------

DensityIdentityResult density_identity_residual(const SteklovSetup& setup, double lambda,
                                                const Eigen::VectorXd& f,
                                                const Eigen::VectorXd& psi,
                                                const ScalarExpr& sigma) {
    if (!(lambda > 0.0))
        throw PreconditionError("density_identity_residual: eigenvalue must be positive");

    const VariationResult var =
        dtn_variation(setup, PerturbationDirection::conformal(sigma), f);
    const BoundaryMassMatrix Mb_sigma =
        assemble_boundary_mass(setup.mesh, setup.metric, sigma,
                               BoundaryMassOptions{setup.Mb.lumped});

    DensityIdentityResult out;
    out.lhs = psi.dot(setup.Mb.M * var.dLf);
    out.rhs = -0.5 * lambda * psi.dot(Mb_sigma.M * f);
    out.residual = std::abs(out.lhs - out.rhs);
    const auto mb_norm = [&](const Eigen::VectorXd& x) {
        return std::sqrt(std::max(0.0, x.dot(setup.Mb.M * x)));
    };
    out.scale = lambda * mb_norm(psi) * mb_norm(f);
    return out;
}

Eigen::VectorXd finite_difference_dtn(const Mesh& mesh, const MetricField& metric,
                                      const PerturbationDirection& h, const Eigen::VectorXd& f,
                                      double t, int quad_order) {
    if (!(t > 0.0)) throw ValidationError("finite_difference_dtn: step must be positive");
    const MetricField g_plus = metric.perturbed(h, t);
    const MetricField g_minus = metric.perturbed(h, -t);
    for (const MetricField* g : {&g_plus, &g_minus}) {
        const SpdReport report = validate_spd(*g, mesh, quad_order);
        if (!report.ok)
            throw StepTooLargeError(
                "finite_difference_dtn: g +/- t h loses positive definiteness (min eig " +
                std::to_string(report.min_eigenvalue) + ")");
    }
    const SteklovSetup plus(mesh, g_plus, quad_order);
    const SteklovSetup minus(mesh, g_minus, quad_order);
    return (plus.dtn_apply(f) - minus.dtn_apply(f)) / (2.0 * t);
}

}  // namespace steklov
