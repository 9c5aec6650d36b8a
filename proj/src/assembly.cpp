#include "steklov/assembly.hpp"

#include <cmath>

#include "steklov/errors.hpp"
#include "steklov/quadrature.hpp"

namespace steklov {

DofPartition DofPartition::build(const Mesh& mesh) {
    DofPartition p;
    p.boundary = mesh.boundary_vertices();
    p.vertex_to_boundary.assign(mesh.num_vertices(), -1);
    p.vertex_to_interior.assign(mesh.num_vertices(), -1);
    for (int j = 0; j < static_cast<int>(p.boundary.size()); ++j)
        p.vertex_to_boundary[p.boundary[j]] = j;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (p.vertex_to_boundary[v] < 0) {
            p.vertex_to_interior[v] = static_cast<int>(p.interior.size());
            p.interior.push_back(v);
        }
    }
    return p;
}

namespace {

void check_spd(const Mat2& g, const char* where) {
    if (!(g(0, 0) > 0.0) || !(g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) > 0.0))
        throw ValidationError(std::string(where) + ": metric not SPD at quadrature point");
}

// Assembles int_M grad phi_a . C(x) grad phi_b with a per-quadrature-point
// coefficient matrix C; shared by K and DK.
template <typename CoefFn>
SparseMat assemble_gradient_form(const Mesh& mesh, int quad_order, CoefFn&& coef) {
    const auto& rule = triangle_rule(quad_order);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.num_triangles() * 9);
    for (const auto& tri : mesh.triangles) {
        const Vec2 p0 = mesh.vertices[tri[0]];
        const Vec2 p1 = mesh.vertices[tri[1]];
        const Vec2 p2 = mesh.vertices[tri[2]];
        const double area2 = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
        const double area = 0.5 * area2;
        // grad lambda_i = rot90(p_{i+2} - p_{i+1}) / (2 area)
        const auto rot90 = [](const Vec2& v) { return Vec2(-v.y(), v.x()); };
        const Vec2 grads[3] = {rot90(p2 - p1) / area2, rot90(p0 - p2) / area2,
                               rot90(p1 - p0) / area2};
        Mat2 acc = Mat2::Zero();
        for (const auto& q : rule) acc += q.w * coef(barycentric_point(p0, p1, p2, q));
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                triplets.emplace_back(tri[a], tri[b], area * grads[a].dot(acc * grads[b]));
    }
    SparseMat K(mesh.num_vertices(), mesh.num_vertices());
    K.setFromTriplets(triplets.begin(), triplets.end());
    return K;
}

// Assembles a boundary form with a per-quadrature-point scalar density;
// shared by M_b and DM_b.
template <typename DensityFn>
Eigen::MatrixXd assemble_boundary_form(const Mesh& mesh, const DofPartition& dofs, bool lumped,
                                       DensityFn&& density) {
    const int nb = dofs.n_boundary();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nb, nb);
    const auto& rule = edge_rule();
    for (const auto& loop : mesh.boundary_loops) {
        const int n = static_cast<int>(loop.size());
        for (int i = 0; i < n; ++i) {
            const int va = loop[i], vb = loop[(i + 1) % n];
            const int da = dofs.vertex_to_boundary[va], db = dofs.vertex_to_boundary[vb];
            const Vec2 a = mesh.vertices[va], b = mesh.vertices[vb];
            const Vec2 d = b - a;
            const double len = d.norm();
            const Vec2 tau = d / len;
            double m00 = 0.0, m01 = 0.0, m11 = 0.0;
            for (const auto& q : rule) {
                const double rho = density(a + q.t * d, tau);
                const double pa = 1.0 - q.t, pb = q.t;
                m00 += q.w * rho * pa * pa;
                m01 += q.w * rho * pa * pb;
                m11 += q.w * rho * pb * pb;
            }
            M(da, da) += len * m00;
            M(da, db) += len * m01;
            M(db, da) += len * m01;
            M(db, db) += len * m11;
        }
    }
    if (lumped) {
        Eigen::VectorXd rowsum = M.rowwise().sum();
        M.setZero();
        M.diagonal() = rowsum;
    }
    return M;
}

}  // namespace

StiffnessMatrix assemble_stiffness(const Mesh& mesh, const MetricField& metric, int quad_order) {
    StiffnessMatrix out;
    out.dofs = DofPartition::build(mesh);
    out.quad_order = quad_order;
    out.K = assemble_gradient_form(mesh, quad_order, [&](const Vec2& x) -> Mat2 {
        const Mat2 g = metric.eval(x);
        check_spd(g, "assemble_stiffness");
        const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        return std::sqrt(det) * g.inverse();
    });
    return out;
}

StiffnessMatrix assemble_stiffness_derivative(const Mesh& mesh, const MetricField& metric,
                                              const PerturbationDirection& h, int quad_order) {
    StiffnessMatrix out;
    out.dofs = DofPartition::build(mesh);
    out.quad_order = quad_order;
    out.K = assemble_gradient_form(mesh, quad_order, [&](const Vec2& x) -> Mat2 {
        const Mat2 g = metric.eval(x);
        check_spd(g, "assemble_stiffness_derivative");
        const Mat2 hx = h.tensor_at(metric, x);
        const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        const Mat2 gi = g.inverse();
        const double tr_gh = (gi * hx).trace();
        return std::sqrt(det) * (0.5 * tr_gh * gi - gi * hx * gi);
    });
    return out;
}

BoundaryMassMatrix assemble_boundary_mass(const Mesh& mesh, const MetricField& metric,
                                          const std::optional<ScalarExpr>& weight,
                                          const BoundaryMassOptions& options) {
    const DofPartition dofs = DofPartition::build(mesh);
    BoundaryMassMatrix out;
    out.lumped = options.lumped;
    out.weighted = weight.has_value();
    out.M = assemble_boundary_form(
        mesh, dofs, options.lumped, [&](const Vec2& x, const Vec2& tau) -> double {
            const Mat2 g = metric.eval(x);
            check_spd(g, "assemble_boundary_mass");
            const double w = weight ? weight->eval(x) : 1.0;
            return w * std::sqrt(tau.dot(g * tau));
        });
    return out;
}

BoundaryMassMatrix assemble_boundary_mass_derivative(const Mesh& mesh, const MetricField& metric,
                                                     const PerturbationDirection& h,
                                                     const BoundaryMassOptions& options) {
    const DofPartition dofs = DofPartition::build(mesh);
    BoundaryMassMatrix out;
    out.lumped = options.lumped;
    out.weighted = true;
    out.M = assemble_boundary_form(
        mesh, dofs, options.lumped, [&](const Vec2& x, const Vec2& tau) -> double {
            const Mat2 g = metric.eval(x);
            check_spd(g, "assemble_boundary_mass_derivative");
            const Mat2 hx = h.tensor_at(metric, x);
            return 0.5 * tau.dot(hx * tau) / std::sqrt(tau.dot(g * tau));
        });
    return out;
}

namespace {

SparseMat extract_block(const SparseMat& K, const std::vector<int>& row_map,
                        const std::vector<int>& col_map, int n_rows, int n_cols) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (int col = 0; col < K.outerSize(); ++col) {
        const int jc = col_map[col];
        if (jc < 0) continue;
        for (SparseMat::InnerIterator it(K, col); it; ++it) {
            const int ir = row_map[it.row()];
            if (ir >= 0) triplets.emplace_back(ir, jc, it.value());
        }
    }
    SparseMat B(n_rows, n_cols);
    B.setFromTriplets(triplets.begin(), triplets.end());
    return B;
}

}  // namespace

DirichletSolver::DirichletSolver(StiffnessMatrix K) : K_(std::move(K)) {
    const auto& dofs = K_.dofs;
    K_ii_ = extract_block(K_.K, dofs.vertex_to_interior, dofs.vertex_to_interior,
                          dofs.n_interior(), dofs.n_interior());
    K_ib_ = extract_block(K_.K, dofs.vertex_to_interior, dofs.vertex_to_boundary,
                          dofs.n_interior(), dofs.n_boundary());
    K_bb_ = extract_block(K_.K, dofs.vertex_to_boundary, dofs.vertex_to_boundary,
                          dofs.n_boundary(), dofs.n_boundary());
    factorization_.compute(K_ii_);
    if (factorization_.info() != Eigen::Success)
        throw SolverError("DirichletSolver: factorization of K_ii failed");
}

Eigen::VectorXd DirichletSolver::solve_interior(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = factorization_.solve(rhs);
    if (factorization_.info() != Eigen::Success)
        throw SolverError("DirichletSolver: interior solve failed");
    return x;
}

Eigen::MatrixXd DirichletSolver::solve_interior(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd x = factorization_.solve(rhs);
    if (factorization_.info() != Eigen::Success)
        throw SolverError("DirichletSolver: interior solve failed");
    return x;
}

Eigen::VectorXd DirichletSolver::boundary_load(const Eigen::VectorXd& u_full) const {
    const Eigen::VectorXd Ku = K_.K * u_full;
    return boundary_part(K_.dofs, Ku);
}

InteriorField harmonic_extension(const DirichletSolver& solver, const Eigen::VectorXd& f) {
    const auto& dofs = solver.dofs();
    if (f.size() != dofs.n_boundary())
        throw ValidationError("harmonic_extension: boundary data has wrong size");
    const Eigen::VectorXd rhs = -(solver.K_ib() * f);
    const Eigen::VectorXd ui = solver.solve_interior(rhs);

    InteriorField u;
    u.values = Eigen::VectorXd::Zero(dofs.n_boundary() + dofs.n_interior());
    for (int j = 0; j < dofs.n_boundary(); ++j) u.values[dofs.boundary[j]] = f[j];
    for (int j = 0; j < dofs.n_interior(); ++j) u.values[dofs.interior[j]] = ui[j];
    u.harmonic = true;

    const double rhs_norm = rhs.norm();
    if (rhs_norm > 0.0)
        u.interior_residual = (solver.K_ii() * ui - rhs).norm() / rhs_norm;
    return u;
}

Eigen::VectorXd boundary_part(const DofPartition& dofs, const Eigen::VectorXd& full) {
    Eigen::VectorXd out(dofs.n_boundary());
    for (int j = 0; j < dofs.n_boundary(); ++j) out[j] = full[dofs.boundary[j]];
    return out;
}

Eigen::VectorXd full_from_boundary(const DofPartition& dofs, const Eigen::VectorXd& f_boundary) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dofs.n_boundary() + dofs.n_interior());
    for (int j = 0; j < dofs.n_boundary(); ++j) out[dofs.boundary[j]] = f_boundary[j];
    return out;
}

}  // namespace steklov
