#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "steklov/errors.hpp"
#include "steklov/geometry.hpp"
#include "steklov/mesh_io.hpp"
#include "steklov/quadrature.hpp"

using namespace steklov;

namespace {
constexpr double kPi = std::numbers::pi;

double mesh_area(const Mesh& m) {
    double a = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) a += triangle_area(m, t);
    return a;
}
}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("disk mesh: boundary snap, loop structure, h_max contract") {
    const Mesh coarse = generate_disk_mesh(1.0, 0.5);
    validate_mesh(coarse);
    CHECK(coarse.boundary_loops.size() == 1);
    for (int v : coarse.boundary_loops[0])
        CHECK(std::abs(coarse.vertices[v].norm() - 1.0) <= 1e-12);
    CHECK(coarse.h_max <= 1.5 * 0.5);

    const Mesh fine = generate_disk_mesh(1.0, 0.05);
    validate_mesh(fine);
    CHECK(fine.boundary_loops.size() == 1);
    CHECK(fine.h_max <= 0.075);
}

TEST_CASE("disk mesh: total area against closed form") {
    const Mesh m = generate_disk_mesh(2.0, 0.1);
    CHECK(mesh_area(m) == doctest::Approx(4.0 * kPi).epsilon(0.005));
}

TEST_CASE("disk mesh: preconditions and capacity") {
    CHECK_THROWS_AS(generate_disk_mesh(-1.0, 0.1), ValidationError);
    CHECK_THROWS_AS(generate_disk_mesh(1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(generate_disk_mesh(1.0, 2.0), ValidationError);
    CHECK_THROWS_AS(generate_disk_mesh(1.0, 1e-4, 2000), CapacityError);
}

TEST_CASE("annulus mesh: loops, normals, area, thin case") {
    const Mesh m = generate_annulus_mesh(0.5, 1.0, 0.05);
    validate_mesh(m);
    REQUIRE(m.boundary_loops.size() == 2);
    // Inner-loop outward normals point toward the origin.
    const auto& inner = m.boundary_loops[1];
    for (size_t i = 0; i < inner.size(); ++i) {
        const Vec2 pos = m.vertices[inner[i]];
        CHECK(std::abs(pos.norm() - 0.5) <= 1e-12);
        CHECK(m.boundary_normals[1][i].dot(-pos) > 0.0);
    }
    for (size_t i = 0; i < m.boundary_loops[0].size(); ++i) {
        const Vec2 pos = m.vertices[m.boundary_loops[0][i]];
        CHECK(m.boundary_normals[0][i].dot(pos) > 0.0);
    }

    const Mesh coarse = generate_annulus_mesh(0.5, 1.0, 0.1);
    CHECK(mesh_area(coarse) == doctest::Approx(kPi * 0.75).epsilon(0.01));

    const Mesh thin = generate_annulus_mesh(0.9, 1.0, 0.02);
    validate_mesh(thin);  // includes positive-area check

    CHECK_THROWS_AS(generate_annulus_mesh(1.0, 0.5, 0.1), ValidationError);
    CHECK_THROWS_AS(generate_annulus_mesh(0.0, 1.0, 0.1), ValidationError);
}

TEST_CASE("refine: counts, boundary projection, h_max decay, loop preservation") {
    const Mesh m = generate_disk_mesh(1.0, 0.3);
    const Mesh r = refine(m);
    validate_mesh(r);
    CHECK(r.num_triangles() == 4 * m.num_triangles());
    for (int v : r.boundary_loops[0]) CHECK(std::abs(r.vertices[v].norm() - 1.0) <= 1e-12);

    // Loop count and orientation: original vertices appear at even positions
    // in the refined loop, in the original cyclic order.
    REQUIRE(r.boundary_loops.size() == m.boundary_loops.size());
    const auto& lm = m.boundary_loops[0];
    const auto& lr = r.boundary_loops[0];
    REQUIRE(lr.size() == 2 * lm.size());
    for (size_t i = 0; i < lm.size(); ++i) CHECK(lr[2 * i] == lm[i]);

    const Mesh a = generate_annulus_mesh(0.5, 1.0, 0.2);
    const Mesh a2 = refine(refine(a));
    validate_mesh(a2);
    CHECK(a2.h_max <= 0.3 * a.h_max);
    for (int v : a2.boundary_loops[1]) CHECK(std::abs(a2.vertices[v].norm() - 0.5) <= 1e-12);
}

TEST_CASE("boundary arclength: circumferences and exact metric scaling") {
    const MetricField euclid = MetricField::euclidean();
    Mesh m = generate_disk_mesh(1.0, 0.2);

    // Total length converges to 2 pi at second order under refinement.
    double prev_err = 0.0;
    for (int level = 0; level < 3; ++level) {
        if (level > 0) m = refine(m);
        const auto arcs = boundary_arclength(m, euclid);
        const double err = std::abs(arcs[0].total - 2.0 * kPi);
        if (level > 0) CHECK(err < 0.35 * prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 2e-4);

    // g = 4 * euclidean doubles every edge length exactly.
    const MetricField scaled = MetricField::euclidean(4.0);
    const auto arcs1 = boundary_arclength(m, euclid);
    const auto arcs4 = boundary_arclength(m, scaled);
    for (size_t i = 0; i < arcs1[0].s.size(); ++i)
        CHECK(arcs4[0].s[i] == 2.0 * arcs1[0].s[i]);
    CHECK(arcs4[0].total == 2.0 * arcs1[0].total);

    // Annulus loop totals.
    const Mesh am = generate_annulus_mesh(0.5, 1.0, 0.05);
    const auto aarcs = boundary_arclength(am, euclid);
    CHECK(aarcs[0].total == doctest::Approx(2.0 * kPi).epsilon(1e-3));
    CHECK(aarcs[1].total == doctest::Approx(kPi).epsilon(1e-3));

    // Non-SPD metric rejected at the quadrature points.
    const MetricField bad = MetricField::general(ScalarExpr::constant(1.0), ScalarExpr::zero(),
                                                 ScalarExpr::constant(-1.0));
    CHECK_THROWS_AS(boundary_arclength(m, bad), ValidationError);
}

TEST_CASE("random conformal sampler: determinism, seed sensitivity, bound") {
    const PerturbationDirection a = sample_random_conformal(42, 3, 0.1);
    const PerturbationDirection b = sample_random_conformal(42, 3, 0.1);
    const PerturbationDirection c = sample_random_conformal(43, 3, 0.1);

    REQUIRE(a.sigma.terms().size() == b.sigma.terms().size());
    bool identical = true, different = false;
    for (size_t i = 0; i < a.sigma.terms().size(); ++i) {
        identical = identical && a.sigma.terms()[i].coeff == b.sigma.terms()[i].coeff;
        different = different || a.sigma.terms()[i].coeff != c.sigma.terms()[i].coeff;
    }
    CHECK(identical);
    CHECK(different);

    // Sup over quadrature points bounded by amplitude * #terms (and in fact by
    // amplitude, by the 1/#terms basis normalization).
    const PerturbationDirection d = sample_random_conformal(7, 2, 0.05);
    const Mesh m = generate_disk_mesh(1.0, 0.1);
    double sup = 0.0;
    for (const auto& tri : m.triangles)
        for (const auto& q : triangle_rule(2)) {
            const Vec2 p = barycentric_point(m.vertices[tri[0]], m.vertices[tri[1]],
                                             m.vertices[tri[2]], q);
            sup = std::max(sup, std::abs(d.sigma.eval(p)));
        }
    CHECK(sup <= 0.05 * static_cast<double>(d.sigma.terms().size()));
    CHECK(sup <= 0.05);

    CHECK_THROWS_AS(sample_random_conformal(1, 0, 0.1), ValidationError);
    CHECK_THROWS_AS(sample_random_conformal(1, 3, 0.0), ValidationError);
}

TEST_CASE("validate_spd: identity, conformal factor, indefinite descriptor") {
    const Mesh m = generate_disk_mesh(1.0, 0.15);

    const SpdReport id = validate_spd(MetricField::euclidean(), m);
    CHECK(id.ok);
    CHECK(id.min_eigenvalue == doctest::Approx(1.0));

    // g = e^{2 phi} I with phi = 0.3 x: min eigenvalue is e^{0.6 x_min} over
    // the quadrature points; recompute the oracle directly.
    const MetricField conf = MetricField::conformal_euclidean(ScalarExpr::monomial(0.3, 1, 0));
    const SpdReport rep = validate_spd(conf, m);
    double x_min = 1e30;
    for (const auto& tri : m.triangles)
        for (const auto& q : triangle_rule(2))
            x_min = std::min(x_min, barycentric_point(m.vertices[tri[0]], m.vertices[tri[1]],
                                                      m.vertices[tri[2]], q)
                                        .x());
    for (const auto& loop : m.boundary_loops)
        for (size_t i = 0; i < loop.size(); ++i) {
            const Vec2 va = m.vertices[loop[i]];
            const Vec2 vb = m.vertices[loop[(i + 1) % loop.size()]];
            for (const auto& q : edge_rule()) x_min = std::min(x_min, (va + q.t * (vb - va)).x());
        }
    CHECK(rep.ok);
    CHECK(rep.min_eigenvalue == doctest::Approx(std::exp(0.6 * x_min)).epsilon(1e-12));

    const MetricField bad = MetricField::general(ScalarExpr::constant(1.0), ScalarExpr::zero(),
                                                 ScalarExpr::constant(-1.0));
    CHECK_FALSE(validate_spd(bad, m).ok);
}

TEST_CASE("perturbation directions: inverse variation and conformal materialization") {
    const MetricField g = MetricField::general(
        ScalarExpr::constant(1.0) + ScalarExpr::monomial(0.2, 1, 0), ScalarExpr::monomial(0.1, 0, 1),
        ScalarExpr::constant(1.5));
    const ScalarExpr sigma = ScalarExpr::monomial(0.3, 1, 1) + ScalarExpr::constant(0.2);
    const PerturbationDirection conf = PerturbationDirection::conformal(sigma);
    const PerturbationDirection gen = PerturbationDirection::general(
        ScalarExpr::monomial(1.0, 1, 0), ScalarExpr::constant(0.2), ScalarExpr::monomial(-1.0, 1, 0));

    const Vec2 pts[] = {{0.3, -0.2}, {0.0, 0.0}, {-0.7, 0.5}};
    for (const Vec2& p : pts) {
        // Conformal inverse variation has the closed form -sigma g^{-1}.
        const Mat2 gi = g.eval(p).inverse();
        const Mat2 expected = -sigma.eval(p) * gi;
        CHECK((conf.inverse_variation_at(g, p) - expected).cwiseAbs().maxCoeff() <= 1e-14);

        // General: h^{ij} + (g^{-1} h g^{-1})^{ij} = 0 to machine precision.
        const Mat2 h = gen.tensor_at(g, p);
        const Mat2 residual = gen.inverse_variation_at(g, p) + gi * h * gi;
        CHECK(residual.cwiseAbs().maxCoeff() <= 1e-13);
    }

    // sigma == c materializes as exactly c * g.
    const PerturbationDirection cdir = PerturbationDirection::conformal(ScalarExpr::constant(0.25));
    for (const Vec2& p : pts) {
        const Mat2 diff = cdir.tensor_at(g, p) - 0.25 * g.eval(p);
        CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("metric descriptors: derivatives agree with central differences") {
    const MetricField fields[] = {
        MetricField::conformal_euclidean(ScalarExpr::monomial(0.3, 1, 0) +
                                         ScalarExpr::wave(0.2, 1.5, -0.5)),
        MetricField::general(ScalarExpr::constant(1.0) + ScalarExpr::monomial(0.1, 2, 0),
                             ScalarExpr::monomial(0.05, 1, 1),
                             ScalarExpr::constant(1.2) + ScalarExpr::wave(0.1, 0.0, 2.0))};
    const double t = 1e-6;
    for (const MetricField& g : fields) {
        const Vec2 p(0.4, -0.3);
        const auto dg = g.eval_derivatives(p);
        for (int k = 0; k < 2; ++k) {
            const Vec2 dp = k == 0 ? Vec2(t, 0.0) : Vec2(0.0, t);
            const Mat2 fd = (g.eval(p + dp) - g.eval(p - dp)) / (2.0 * t);
            CHECK((dg[k] - fd).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
}

TEST_CASE("mesh io: native format round trip") {
    const Mesh m = generate_annulus_mesh(0.5, 1.0, 0.2);
    std::stringstream ss;
    write_mesh(ss, m);
    const Mesh r = read_mesh(ss);
    REQUIRE(r.num_vertices() == m.num_vertices());
    REQUIRE(r.num_triangles() == m.num_triangles());
    for (int i = 0; i < m.num_vertices(); ++i) {
        CHECK(r.vertices[i].x() == m.vertices[i].x());
        CHECK(r.vertices[i].y() == m.vertices[i].y());
    }
    CHECK(r.triangles == m.triangles);
    CHECK(r.boundary_loops == m.boundary_loops);
    CHECK(r.domain.kind == DomainDescriptor::Kind::Annulus);
    CHECK(r.domain.r_inner == m.domain.r_inner);
}

TEST_CASE("mesh io: triangle node/ele import") {
    // A 1-based square split into two triangles.
    const std::string node_path = "/tmp/steklov_io_test.node";
    const std::string ele_path = "/tmp/steklov_io_test.ele";
    {
        std::ofstream ns(node_path);
        ns << "4 2 0 1\n";
        ns << "1 0.0 0.0 1\n2 1.0 0.0 1\n3 1.0 1.0 1\n4 0.0 1.0 1\n";
        std::ofstream es(ele_path);
        es << "2 3 0\n";
        es << "1 1 2 3\n2 1 3 4\n";
    }
    const Mesh m = import_triangle_files(node_path, ele_path);
    CHECK(m.num_vertices() == 4);
    CHECK(m.num_triangles() == 2);
    REQUIRE(m.boundary_loops.size() == 1);
    CHECK(m.boundary_loops[0].size() == 4);
    validate_mesh(m);
}

}  // TEST_SUITE
