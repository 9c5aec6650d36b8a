#pragma once

// Meshes of the benchmark domains plus the metric-tensor machinery.
//
// Meshes are conforming P1 triangulations. The structured disk/annulus
// generators keep an exact C_16 (or finer) rotational symmetry so that the
// cos/sin eigenvalue pairs of the round domains stay numerically degenerate;
// the genericity experiments rely on that baseline.
//
// Metric fields are closed-form descriptors (not sampled grids) so the
// variation formulas can use exact spatial derivatives of g and h.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "steklov/expr.hpp"

namespace steklov {

struct DomainDescriptor {
    enum class Kind : std::uint8_t { None, Disk, Annulus };
    Kind kind = Kind::None;
    double r_inner = 0.0;
    double r_outer = 0.0;

    static DomainDescriptor none() { return {}; }
    static DomainDescriptor disk(double radius) {
        return {Kind::Disk, 0.0, radius};
    }
    static DomainDescriptor annulus(double r_inner, double r_outer) {
        return {Kind::Annulus, r_inner, r_outer};
    }
};

struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;  // CCW index triples
    // Ordered cyclic vertex lists, domain on the left (outer loop CCW,
    // inner loops CW). Loop 0 is the outer boundary for generated meshes.
    std::vector<std::vector<int>> boundary_loops;
    // Unit outward normal per boundary vertex, parallel to boundary_loops.
    std::vector<std::vector<Vec2>> boundary_normals;
    double h_max = 0.0;
    DomainDescriptor domain;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    /// Boundary vertex indices flattened in loop order; this fixes the
    /// boundary DOF ordering used by every matrix in the pipeline.
    std::vector<int> boundary_vertices() const;
    bool is_boundary_vertex(int v) const;
};

double triangle_area(const Mesh& mesh, int t);
double compute_h_max(const Mesh& mesh);

/// Recomputes outward normals from edge/triangle adjacency (orientation of the
/// stored loops does not matter). Throws ValidationError if a boundary edge is
/// not owned by exactly one triangle.
void compute_boundary_normals(Mesh& mesh);

/// Checks the Mesh invariants (positive areas, closed loops, outward unit
/// normals); throws ValidationError with a description on the first failure.
void validate_mesh(const Mesh& mesh);

inline constexpr int kDefaultVertexBudget = 4'000'000;

Mesh generate_disk_mesh(double radius, double target_h,
                        int vertex_budget = kDefaultVertexBudget);
Mesh generate_annulus_mesh(double r_inner, double r_outer, double target_h,
                           int vertex_budget = kDefaultVertexBudget);

/// Uniform 1:4 refinement; boundary midpoints are projected back onto the
/// analytic boundary when the mesh carries a domain descriptor.
Mesh refine(const Mesh& mesh);

class MetricField;

struct PerturbationDirection {
    enum class Kind : std::uint8_t { General, Conformal };
    Kind kind = Kind::General;
    ScalarExpr sigma;            // conformal: h = sigma * g
    ScalarExpr h11, h12, h22;    // general: entries of h

    static PerturbationDirection conformal(ScalarExpr sigma);
    static PerturbationDirection general(ScalarExpr h11, ScalarExpr h12, ScalarExpr h22);
    static PerturbationDirection zero();

    bool is_conformal() const { return kind == Kind::Conformal; }

    /// h materialized against the metric at a point.
    Mat2 tensor_at(const MetricField& g, const Vec2& p) const;
    /// Spatial derivatives {d_x h, d_y h} of the materialized tensor.
    std::array<Mat2, 2> tensor_derivatives(const MetricField& g, const Vec2& p) const;
    /// Components of D(g^{-1}) in direction h, i.e. -(g^{-1} h g^{-1}).
    Mat2 inverse_variation_at(const MetricField& g, const Vec2& p) const;

    std::string describe() const;
};

class MetricField {
  public:
    MetricField();  // Euclidean

    static MetricField euclidean(double scale = 1.0);
    /// g = e^{2 phi} * I
    static MetricField conformal_euclidean(ScalarExpr phi);
    static MetricField general(ScalarExpr g11, ScalarExpr g12, ScalarExpr g22);
    /// The metric g + t*h with exact descriptor-level derivatives.
    MetricField perturbed(const PerturbationDirection& direction, double t) const;

    Mat2 eval(const Vec2& p) const;
    /// {d_x g, d_y g}
    std::array<Mat2, 2> eval_derivatives(const Vec2& p) const;

    std::string describe() const;

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    explicit MetricField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
};

/// Seeded conformal perturbation direction. sigma is a plane-wave sum
///   sigma(x) = amplitude * sum_a c_a T_a(x),  c_a iid uniform on [-1,1],
/// where the T_a are cos/sin waves with wavevectors pi*(j,k), |j|+|k| <= modes,
/// each scaled by 1/#terms so |sigma| <= amplitude everywhere. Identical
/// (seed, modes, amplitude) reproduce sigma bit-exactly.
PerturbationDirection sample_random_conformal(std::uint64_t seed, int modes,
                                              double amplitude);

struct SpdReport {
    double min_eigenvalue = 0.0;
    Vec2 worst_point = Vec2::Zero();
    bool ok = false;
};

/// Minimum eigenvalue of g over the quadrature points of the mesh (triangle
/// and boundary-edge rules); ok is false when it is <= 0.
SpdReport validate_spd(const MetricField& metric, const Mesh& mesh, int quad_order = 2);

struct LoopArclength {
    std::vector<double> s;  // cumulative g-arclength at each loop vertex, s[0] = 0
    double total = 0.0;
};

/// Cyclic arclength coordinates per loop, with edge lengths integrated as
/// int sqrt(g(tau,tau)) dl. Throws ValidationError on a non-SPD metric sample.
std::vector<LoopArclength> boundary_arclength(const Mesh& mesh, const MetricField& metric);

}  // namespace steklov
