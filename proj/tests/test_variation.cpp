#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "steklov/errors.hpp"
#include "steklov/variation.hpp"

using namespace steklov;

namespace {
constexpr double kPi = std::numbers::pi;

struct Fixture {
    Mesh mesh;
    SteklovSetup setup;
    DtnOperator dtn;
    SteklovSpectrum spec;
    explicit Fixture(double target_h, int count = 8)
        : mesh(generate_disk_mesh(1.0, target_h)),
          setup(mesh, MetricField::euclidean()),
          dtn(dtn_schur(setup.solver, setup.Mb, 2)),
          spec(steklov_eigs(dtn, count)) {}

    double mb_norm(const Eigen::VectorXd& v) const { return std::sqrt(v.dot(setup.Mb.M * v)); }
};

// Lumped Euclidean volume mass, used as the interior M-weighted norm.
Eigen::VectorXd lumped_volume_mass(const Mesh& mesh) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double a = triangle_area(mesh, t) / 3.0;
        for (int v : mesh.triangles[t]) m[v] += a;
    }
    return m;
}

const PerturbationDirection kGeneralH = PerturbationDirection::general(
    ScalarExpr::monomial(1.0, 1, 0), ScalarExpr::zero(), ScalarExpr::monomial(-1.0, 1, 0));

}  // namespace

TEST_SUITE("variation") {

TEST_CASE("variation of harmonic extension: conformal and zero directions vanish") {
    Fixture fx(0.1);
    const Eigen::VectorXd f = fx.spec.eigenvectors.col(1);

    const ScalarExpr sigma = ScalarExpr::monomial(0.5, 1, 1) + ScalarExpr::wave(0.3, 2.0, 1.0);
    const InteriorField v_conf =
        variation_of_harmonic_extension(fx.setup, PerturbationDirection::conformal(sigma), f);
    CHECK(v_conf.values.cwiseAbs().maxCoeff() <= 1e-12);

    const InteriorField v0 =
        variation_of_harmonic_extension(fx.setup, PerturbationDirection::zero(), f);
    CHECK(v0.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("variation of harmonic extension: FD oracle for a general direction") {
    Fixture fx(0.08);
    const auto bv = fx.mesh.boundary_vertices();
    Eigen::VectorXd f(bv.size());
    for (size_t i = 0; i < bv.size(); ++i) {
        const Vec2 p = fx.mesh.vertices[bv[i]];
        f[i] = std::cos(std::atan2(p.y(), p.x()));
    }
    const PerturbationDirection h = PerturbationDirection::general(
        ScalarExpr::monomial(1.0, 1, 0), ScalarExpr::zero(), ScalarExpr::zero());

    const InteriorField v = variation_of_harmonic_extension(fx.setup, h, f);
    CHECK(v.interior_residual <= 1e-10);
    // boundary values vanish exactly
    for (int idx : bv) CHECK(v.values[idx] == 0.0);

    const double t = 1e-5;
    const SteklovSetup plus(fx.mesh, fx.setup.metric.perturbed(h, t));
    const SteklovSetup minus(fx.mesh, fx.setup.metric.perturbed(h, -t));
    const Eigen::VectorXd fd = (harmonic_extension(*plus.solver, f).values -
                                harmonic_extension(*minus.solver, f).values) /
                               (2.0 * t);
    const Eigen::VectorXd mass = lumped_volume_mass(fx.mesh);
    const Eigen::VectorXd diff = v.values - fd;
    const double rel = std::sqrt(diff.dot(mass.asDiagonal() * diff)) /
                       std::sqrt(v.values.dot(mass.asDiagonal() * v.values));
    CHECK(rel <= 1e-7);
}

TEST_CASE("2d conformal closed form: dLf = -(sigma/2) lambda f as an exact discrete identity") {
    Fixture fx(0.06, 10);
    for (const std::uint64_t seed : {11u, 12u, 13u}) {
        const PerturbationDirection dir = sample_random_conformal(seed, 3, 0.5);
        const BoundaryMassMatrix Mb_sigma =
            assemble_boundary_mass(fx.mesh, fx.setup.metric, dir.sigma);
        for (int k = 1; k < 10; ++k) {
            const double lambda = fx.spec.eigenvalues[k];
            const Eigen::VectorXd f = fx.spec.eigenvectors.col(k);
            const VariationResult var = dtn_variation(fx.setup, dir, f);
            const Eigen::VectorXd reference = -0.5 * lambda * fx.setup.mb_solve(Mb_sigma.M * f);
            CHECK(fx.mb_norm(var.dLf - reference) <= 1e-10 * lambda * fx.mb_norm(f));
            // decomposition sums exactly to dLf
            const Eigen::VectorXd recon =
                var.term_stiffness + var.term_interior + var.term_measure;
            CHECK((recon - var.dLf).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("conformal consistency: production path equals the v-flux reconstruction") {
    Fixture fx(0.1);
    const ScalarExpr sigma = ScalarExpr::monomial(0.4, 1, 0) + ScalarExpr::wave(0.2, 0.0, 2.0);
    const PerturbationDirection dir = PerturbationDirection::conformal(sigma);
    const Eigen::VectorXd f = fx.spec.eigenvectors.col(3);

    const VariationResult var = dtn_variation(fx.setup, dir, f);

    // Reconstruction: v from the interior problem, then the weak v-flux plus
    // the -(sigma/2) measure term assembled independently.
    const InteriorField v = variation_of_harmonic_extension(fx.setup, dir, f);
    const Eigen::VectorXd Kv = fx.setup.solver->stiffness().K * v.values;
    const auto& dofs = fx.setup.solver->dofs();
    Eigen::VectorXd flux(dofs.n_boundary());
    for (int j = 0; j < dofs.n_boundary(); ++j) flux[j] = Kv[dofs.boundary[j]];
    const BoundaryMassMatrix Mb_sigma =
        assemble_boundary_mass(fx.mesh, fx.setup.metric, sigma);
    const Eigen::VectorXd lf = fx.setup.dtn_apply(f);
    const Eigen::VectorXd reconstruction =
        fx.setup.mb_solve(flux) - 0.5 * fx.setup.mb_solve(Mb_sigma.M * lf);
    CHECK(fx.mb_norm(var.dLf - reconstruction) <= 1e-12 * std::max(1.0, fx.mb_norm(var.dLf)));
}

TEST_CASE("general directions: FD oracle with second-order convergence") {
    Fixture fx(0.08);
    const Eigen::VectorXd f = fx.spec.eigenvectors.col(1);
    const VariationResult var = dtn_variation(fx.setup, kGeneralH, f);
    const double ref = fx.mb_norm(var.dLf);

    std::vector<double> mismatch;
    for (const double t : {1e-3, 5e-4, 2.5e-4}) {
        const Eigen::VectorXd fd =
            finite_difference_dtn(fx.mesh, fx.setup.metric, kGeneralH, f, t);
        mismatch.push_back(fx.mb_norm(fd - var.dLf) / ref);
    }
    CHECK(mismatch.back() <= 1e-6);
    CHECK(mismatch[0] / mismatch[1] == doctest::Approx(4.0).epsilon(0.10));
    CHECK(mismatch[1] / mismatch[2] == doctest::Approx(4.0).epsilon(0.10));
}

TEST_CASE("finite_difference_dtn: zero direction, step-too-large, constant-sigma closed form") {
    Fixture fx(0.12);
    const Eigen::VectorXd f = fx.spec.eigenvectors.col(1);
    const double lambda = fx.spec.eigenvalues[1];

    const Eigen::VectorXd fd0 =
        finite_difference_dtn(fx.mesh, fx.setup.metric, PerturbationDirection::zero(), f, 1e-4);
    CHECK(fd0.cwiseAbs().maxCoeff() <= 1e-12);

    // sigma == 1, t = 2 makes g - t h = -I: not SPD.
    const PerturbationDirection one = PerturbationDirection::conformal(ScalarExpr::constant(1.0));
    CHECK_THROWS_AS(finite_difference_dtn(fx.mesh, fx.setup.metric, one, f, 2.0),
                    StepTooLargeError);

    // Lambda((1+t) g) = Lambda(g)/sqrt(1+t): FD ~ -lambda f / 2 with O(t^2) error.
    const double t = 1e-3;
    const Eigen::VectorXd fd = finite_difference_dtn(fx.mesh, fx.setup.metric, one, f, t);
    const Eigen::VectorXd expected = -0.5 * lambda * f;
    CHECK(fx.mb_norm(fd - expected) <= 2.0 * t * t * lambda * fx.mb_norm(f) / t);  // O(t^2)/t slack
    CHECK(fx.mb_norm(fd - expected) <= 1e-3 * lambda * fx.mb_norm(f));
}

TEST_CASE("dtn_variation is linear in the direction and in the boundary data") {
    Fixture fx(0.12);
    const Eigen::VectorXd f = fx.spec.eigenvectors.col(2);
    const Eigen::VectorXd f2 = fx.spec.eigenvectors.col(4);

    const PerturbationDirection h1 = PerturbationDirection::general(
        ScalarExpr::monomial(0.5, 1, 0), ScalarExpr::constant(0.1), ScalarExpr::zero());
    const PerturbationDirection h2 = PerturbationDirection::general(
        ScalarExpr::zero(), ScalarExpr::monomial(0.2, 0, 1), ScalarExpr::monomial(-0.4, 1, 0));
    const PerturbationDirection h_sum = PerturbationDirection::general(
        h1.h11 + h2.h11, h1.h12 + h2.h12, h1.h22 + h2.h22);

    const Eigen::VectorXd a = dtn_variation(fx.setup, h1, f).dLf;
    const Eigen::VectorXd b = dtn_variation(fx.setup, h2, f).dLf;
    const Eigen::VectorXd ab = dtn_variation(fx.setup, h_sum, f).dLf;
    CHECK(fx.mb_norm(ab - a - b) <= 1e-12 * std::max(1.0, fx.mb_norm(ab)));

    const Eigen::VectorXd c = dtn_variation(fx.setup, h1, f2).dLf;
    const Eigen::VectorXd fc = dtn_variation(fx.setup, h1, Eigen::VectorXd(f + 2.0 * f2)).dLf;
    CHECK(fx.mb_norm(fc - a - 2.0 * c) <= 1e-12 * std::max(1.0, fx.mb_norm(fc)));
}

TEST_CASE("coordinate formula: conformal cases across dimensions") {
    // n = 2, harmonic u, conformal h: the (1 - n/2) factor kills the value.
    {
        const MetricField g = MetricField::euclidean();
        const ScalarExpr u = ScalarExpr::monomial(1.0, 2, 0) + ScalarExpr::monomial(-1.0, 0, 2);
        const ScalarExpr sigma = ScalarExpr::monomial(0.7, 1, 0) + ScalarExpr::constant(0.3);
        const PerturbationDirection dir = PerturbationDirection::conformal(sigma);
        for (const Vec2 p : {Vec2(0.2, 0.1), Vec2(-0.4, 0.6), Vec2(0.0, 0.0)})
            CHECK(std::abs(evaluate_dg_laplacian(g, dir, u, p)) <= 1e-13);
    }

    // n = 3, Euclidean g, conformal h, harmonic u: value = (1/2) <grad sigma, grad u>.
    {
        const int n = 3;
        const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
        const std::vector<Eigen::MatrixXd> dg(n, Eigen::MatrixXd::Zero(n, n));
        // sigma = x + 2y - z, u = x^2 + y^2 - 2z^2 (harmonic in R^3)
        auto grad_sigma = [](const Eigen::Vector3d&) {
            return Eigen::Vector3d(1.0, 2.0, -1.0);
        };
        auto grad_u = [](const Eigen::Vector3d& p) {
            return Eigen::Vector3d(2.0 * p.x(), 2.0 * p.y(), -4.0 * p.z());
        };
        Eigen::MatrixXd hess_u = Eigen::MatrixXd::Zero(n, n);
        hess_u(0, 0) = 2.0;
        hess_u(1, 1) = 2.0;
        hess_u(2, 2) = -4.0;
        for (const Eigen::Vector3d p : {Eigen::Vector3d(0.3, -0.2, 0.5)}) {
            const double sigma = p.x() + 2.0 * p.y() - p.z();
            const Eigen::MatrixXd h = sigma * g;
            std::vector<Eigen::MatrixXd> dh(n);
            const Eigen::Vector3d gs = grad_sigma(p);
            for (int i = 0; i < n; ++i) dh[i] = gs[i] * g;
            const double general =
                dg_laplacian_general(g, dg, h, dh, grad_u(p), hess_u);
            const double conformal =
                dg_laplacian_conformal(g, dg, sigma, gs, grad_u(p), hess_u);
            const double expected = 0.5 * gs.dot(grad_u(p));
            CHECK(general == doctest::Approx(expected).epsilon(1e-12));
            CHECK(conformal == doctest::Approx(expected).epsilon(1e-12));

            // Constant sigma: grad sigma = 0 kills the pairing term, so the
            // variation of the Laplacian of a harmonic field vanishes in any
            // dimension and only the measure term survives in dLf.
            const Eigen::MatrixXd hc = 0.8 * g;
            const std::vector<Eigen::MatrixXd> dhc(n, Eigen::MatrixXd::Zero(n, n));
            CHECK(std::abs(dg_laplacian_general(g, dg, hc, dhc, grad_u(p), hess_u)) <= 1e-14);
            CHECK(std::abs(dg_laplacian_conformal(g, dg, 0.8, Eigen::Vector3d::Zero(),
                                                  grad_u(p), hess_u)) <= 1e-14);
        }
    }
}

TEST_CASE("coordinate formula: FD-in-t oracle on the closed-form Laplace-Beltrami") {
    // Nontrivial metric and direction; u = x^2 - y^2. The general expansion
    // must match the t-derivative of Delta_{g+th} u computed from the
    // closed-form pointwise Laplace-Beltrami.
    const MetricField g = MetricField::general(
        ScalarExpr::constant(1.0) + ScalarExpr::monomial(0.1, 1, 0),
        ScalarExpr::monomial(0.05, 1, 1),
        ScalarExpr::constant(1.0) + ScalarExpr::monomial(0.2, 0, 2));
    const PerturbationDirection h = PerturbationDirection::general(
        ScalarExpr::monomial(0.4, 0, 1), ScalarExpr::constant(0.2) + ScalarExpr::monomial(0.1, 1, 0),
        ScalarExpr::monomial(-0.3, 1, 0));
    const ScalarExpr u = ScalarExpr::monomial(1.0, 2, 0) + ScalarExpr::monomial(-1.0, 0, 2);

    for (const Vec2 p : {Vec2(0.3, 0.2), Vec2(-0.1, 0.5)}) {
        const double value = evaluate_dg_laplacian(g, h, u, p);

        const double t = 1e-6;
        auto lap_at = [&](double tt) {
            const MetricField gt = g.perturbed(h, tt);
            const auto dgt = gt.eval_derivatives(p);
            return laplace_beltrami_point(gt.eval(p), {dgt[0], dgt[1]}, u.gradient(p),
                                          u.hessian(p));
        };
        const double fd = (lap_at(t) - lap_at(-t)) / (2.0 * t);
        CHECK(value == doctest::Approx(fd).epsilon(1e-8));
    }

    // Same check for the Euclidean metric of the spec example.
    const MetricField ge = MetricField::euclidean();
    for (const Vec2 p : {Vec2(0.4, -0.3)}) {
        const double value = evaluate_dg_laplacian(ge, h, u, p);
        const double t = 1e-6;
        auto lap_at = [&](double tt) {
            const MetricField gt = ge.perturbed(h, tt);
            const auto dgt = gt.eval_derivatives(p);
            return laplace_beltrami_point(gt.eval(p), {dgt[0], dgt[1]}, u.gradient(p),
                                          u.hessian(p));
        };
        const double fd = (lap_at(t) - lap_at(-t)) / (2.0 * t);
        CHECK(std::abs(value - fd) <= 1e-8 * std::max(1.0, std::abs(value)));
    }
}

TEST_CASE("density identity at n = 2: exact discrete form") {
    Fixture fx(0.08, 8);
    std::mt19937_64 eng(5);
    auto rnd_vec = [&](int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i)
            v[i] = 2.0 * (static_cast<double>(eng() >> 11) * 0x1.0p-53) - 1.0;
        return v;
    };

    for (int rep = 0; rep < 4; ++rep) {
        const Eigen::VectorXd psi = rnd_vec(fx.setup.n_boundary());
        const PerturbationDirection dir = sample_random_conformal(50 + rep, 3, 1.0);
        for (int k : {1, 3, 5}) {
            const DensityIdentityResult r = density_identity_residual(
                fx.setup, fx.spec.eigenvalues[k], fx.spec.eigenvectors.col(k), psi, dir.sigma);
            CHECK(r.residual <= 1e-10 * r.scale);
        }
    }

    // sigma == 0: both sides vanish
    const DensityIdentityResult zero = density_identity_residual(
        fx.setup, fx.spec.eigenvalues[1], fx.spec.eigenvectors.col(1),
        rnd_vec(fx.setup.n_boundary()), ScalarExpr::zero());
    CHECK(std::abs(zero.lhs) <= 1e-13);
    CHECK(std::abs(zero.rhs) == 0.0);

    // lambda = 0 rejected
    CHECK_THROWS_AS(density_identity_residual(fx.setup, 0.0, fx.spec.eigenvectors.col(0),
                                              fx.spec.eigenvectors.col(1), ScalarExpr::zero()),
                    PreconditionError);

    // Closed-form cross-check: sigma = x, psi = f ~ cos(theta)-type eigenvector.
    // Both sides equal -(lambda/2) int x f^2 ds ~ -(lambda/2) int cos(t) cos^2(t) dt = 0,
    // so each side is O(h^2) small while their difference stays at solver precision.
    {
        const ScalarExpr sigma_x = ScalarExpr::monomial(1.0, 1, 0);
        const Eigen::VectorXd f = fx.spec.eigenvectors.col(1);
        const DensityIdentityResult r =
            density_identity_residual(fx.setup, fx.spec.eigenvalues[1], f, f, sigma_x);
        CHECK(r.residual <= 1e-10 * r.scale);
        // Basis rotation within the cluster is deterministic but arbitrary
        // w.r.t. theta = 0, so evaluate the closed form for a rotated cosine:
        // int cos(t - t0) cos^2(t - t0) cos(t)-free... the odd symmetry still
        // kills the integral only for aligned sigma, so check smallness against
        // the h^2 scale instead of zero.
        CHECK(std::abs(r.lhs) <= 0.5 * fx.spec.eigenvalues[1]);
    }
}

TEST_CASE("self-adjoint variation pairing on a degenerate cluster") {
    Fixture fx(0.1);
    const VariationWorkspace ws = make_variation_workspace(fx.setup, kGeneralH);
    const Eigen::VectorXd f1 = fx.spec.eigenvectors.col(1);
    const Eigen::VectorXd f2 = fx.spec.eigenvectors.col(2);
    const double lambda = fx.spec.eigenvalues[1];

    const Eigen::VectorXd d1 = ds_apply(fx.setup, ws, f1);
    const Eigen::VectorXd d2 = ds_apply(fx.setup, ws, f2);
    const double p12 = f1.dot(d2) - lambda * f1.dot(ws.DMb.M * f2);
    const double p21 = f2.dot(d1) - lambda * f2.dot(ws.DMb.M * f1);
    CHECK(std::abs(p12 - p21) <= 1e-11 * std::max(1.0, std::abs(p12)));
}

}  // TEST_SUITE
