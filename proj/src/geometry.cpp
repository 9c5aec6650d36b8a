#include "steklov/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <utility>

#include "steklov/errors.hpp"
#include "steklov/quadrature.hpp"

namespace steklov {

namespace {

constexpr double kPi = std::numbers::pi;

// Smallest ring node count. Keeping every ring count a multiple of 16 keeps
// the mesh exactly C_16-symmetric, so the cos/sin eigenvalue pairs of the
// round domains stay degenerate for angular orders below 8.
constexpr int kMinRingCount = 16;

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

}  // namespace

std::vector<int> Mesh::boundary_vertices() const {
    std::vector<int> out;
    for (const auto& loop : boundary_loops)
        out.insert(out.end(), loop.begin(), loop.end());
    return out;
}

bool Mesh::is_boundary_vertex(int v) const {
    for (const auto& loop : boundary_loops)
        for (int u : loop)
            if (u == v) return true;
    return false;
}

double triangle_area(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles[t];
    const Vec2 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
    const Vec2 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double compute_h_max(const Mesh& mesh) {
    double h = 0.0;
    for (const auto& tri : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const Vec2 d = mesh.vertices[tri[k]] - mesh.vertices[tri[(k + 1) % 3]];
            h = std::max(h, d.norm());
        }
    }
    return h;
}

void compute_boundary_normals(Mesh& mesh) {
    // Each undirected edge -> (owning triangle count, one owner).
    std::map<EdgeKey, std::pair<int, int>> edge_owner;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            auto& rec = edge_owner[edge_key(tri[k], tri[(k + 1) % 3])];
            rec.first += 1;
            rec.second = t;
        }
    }

    auto edge_normal = [&](int a, int b) -> Vec2 {
        auto it = edge_owner.find(edge_key(a, b));
        if (it == edge_owner.end() || it->second.first != 1)
            throw ValidationError("boundary edge not owned by exactly one triangle");
        const int t = it->second.second;
        const auto& tri = mesh.triangles[t];
        const Vec2 centroid =
            (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
        const Vec2 pa = mesh.vertices[a], pb = mesh.vertices[b];
        const Vec2 tang = pb - pa;
        Vec2 n(tang.y(), -tang.x());
        n.normalize();
        const Vec2 mid = 0.5 * (pa + pb);
        if (n.dot(mid - centroid) < 0.0) n = -n;
        return n;
    };

    mesh.boundary_normals.clear();
    for (const auto& loop : mesh.boundary_loops) {
        const int n = static_cast<int>(loop.size());
        std::vector<Vec2> normals(n);
        for (int i = 0; i < n; ++i) {
            const Vec2 np = edge_normal(loop[(i + n - 1) % n], loop[i]);
            const Vec2 nn = edge_normal(loop[i], loop[(i + 1) % n]);
            normals[i] = (np + nn).normalized();
        }
        mesh.boundary_normals.push_back(std::move(normals));
    }
}

void validate_mesh(const Mesh& mesh) {
    if (mesh.vertices.empty() || mesh.triangles.empty())
        throw ValidationError("empty mesh");
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        for (int v : mesh.triangles[t])
            if (v < 0 || v >= mesh.num_vertices())
                throw ValidationError("triangle vertex index out of range");
        if (triangle_area(mesh, t) <= 0.0)
            throw ValidationError("non-positive triangle area at triangle " + std::to_string(t));
    }

    std::map<EdgeKey, int> edge_count;
    for (const auto& tri : mesh.triangles)
        for (int k = 0; k < 3; ++k) edge_count[edge_key(tri[k], tri[(k + 1) % 3])] += 1;

    std::map<EdgeKey, int> loop_edges;
    for (const auto& loop : mesh.boundary_loops) {
        if (loop.size() < 3) throw ValidationError("boundary loop with fewer than 3 vertices");
        const int n = static_cast<int>(loop.size());
        for (int i = 0; i < n; ++i) loop_edges[edge_key(loop[i], loop[(i + 1) % n])] += 1;
    }
    for (const auto& [key, cnt] : loop_edges) {
        if (cnt != 1) throw ValidationError("boundary loops traverse an edge twice");
        auto it = edge_count.find(key);
        if (it == edge_count.end() || it->second != 1)
            throw ValidationError("loop edge is not a boundary edge of the triangulation");
    }
    for (const auto& [key, cnt] : edge_count) {
        if (cnt == 1 && loop_edges.find(key) == loop_edges.end())
            throw ValidationError("boundary edge missing from the loops");
        if (cnt > 2) throw ValidationError("edge shared by more than two triangles");
    }

    if (mesh.boundary_normals.size() != mesh.boundary_loops.size())
        throw ValidationError("boundary normals not aligned with loops");
    std::map<EdgeKey, std::pair<int, int>> edge_owner;
    for (int t = 0; t < mesh.num_triangles(); ++t)
        for (int k = 0; k < 3; ++k) {
            auto& rec = edge_owner[edge_key(mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3])];
            rec.first += 1;
            rec.second = t;
        }
    for (size_t l = 0; l < mesh.boundary_loops.size(); ++l) {
        const auto& loop = mesh.boundary_loops[l];
        const auto& normals = mesh.boundary_normals[l];
        if (normals.size() != loop.size())
            throw ValidationError("normal count mismatch on loop " + std::to_string(l));
        const int n = static_cast<int>(loop.size());
        for (int i = 0; i < n; ++i) {
            if (std::abs(normals[i].norm() - 1.0) > 1e-12)
                throw ValidationError("boundary normal is not unit length");
            // Outward test against the triangle owning the next edge.
            const auto rec = edge_owner.at(edge_key(loop[i], loop[(i + 1) % n]));
            const auto& tri = mesh.triangles[rec.second];
            const Vec2 centroid =
                (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
            const Vec2 mid = 0.5 * (mesh.vertices[loop[i]] + mesh.vertices[loop[(i + 1) % n]]);
            if (normals[i].dot(mid - centroid) <= 0.0)
                throw ValidationError("boundary normal points inward");
        }
    }
}

namespace {

struct RingSpec {
    double r;
    int n;
};

void emit_same_count_layer(Mesh& mesh, int a_start, int n, int b_start) {
    for (int i = 0; i < n; ++i) {
        const int i1 = (i + 1) % n;
        mesh.triangles.push_back({a_start + i, a_start + i1, b_start + i1});
        mesh.triangles.push_back({a_start + i, b_start + i1, b_start + i});
    }
}

// Outer ring has 2m nodes, inner ring m nodes, angles aligned at even outer nodes.
void emit_halving_layer(Mesh& mesh, int a_start, int m, int b_start) {
    const int na = 2 * m;
    for (int i = 0; i < m; ++i) {
        const int f0 = a_start + 2 * i;
        const int f1 = a_start + (2 * i + 1) % na;
        const int f2 = a_start + (2 * i + 2) % na;
        const int c0 = b_start + i;
        const int c1 = b_start + (i + 1) % m;
        mesh.triangles.push_back({f0, f1, c0});
        mesh.triangles.push_back({f1, c1, c0});
        mesh.triangles.push_back({f1, f2, c1});
    }
}

void emit_fan(Mesh& mesh, int c_start, int n, int center) {
    for (int i = 0; i < n; ++i)
        mesh.triangles.push_back({c_start + i, c_start + (i + 1) % n, center});
}

void append_ring(Mesh& mesh, const RingSpec& ring) {
    for (int j = 0; j < ring.n; ++j) {
        const double th = 2.0 * kPi * j / ring.n;
        mesh.vertices.emplace_back(ring.r * std::cos(th), ring.r * std::sin(th));
    }
}

}  // namespace

Mesh generate_disk_mesh(double radius, double target_h, int vertex_budget) {
    if (!(radius > 0.0) || !(target_h > 0.0) || !(target_h < radius))
        throw ValidationError("generate_disk_mesh: need radius > 0 and 0 < target_h < radius");

    // Boundary spacing margin keeps every edge (including the core fan) below
    // 1.5 * target_h.
    const double s_target = 0.85 * target_h;
    long n = kMinRingCount;
    while (2.0 * kPi * radius / static_cast<double>(n) > s_target) {
        n *= 2;
        if (n > vertex_budget)
            throw CapacityError("generate_disk_mesh: boundary ring alone exceeds vertex budget");
    }
    const double s0 = 2.0 * kPi * radius / static_cast<double>(n);
    const double dr = 0.9 * s0;

    std::vector<RingSpec> rings{{radius, static_cast<int>(n)}};
    double r = radius;
    int cnt = static_cast<int>(n);
    long total = n;
    while (!(cnt == kMinRingCount && r <= 1.7 * s0)) {
        const double next_r = r - dr;
        if (next_r <= 0.8 * s0) break;
        int next_cnt = cnt;
        if (cnt >= 2 * kMinRingCount && 2.0 * kPi * next_r / cnt < 0.655 * s0)
            next_cnt = cnt / 2;
        rings.push_back({next_r, next_cnt});
        r = next_r;
        cnt = next_cnt;
        total += cnt;
        if (total + 1 > vertex_budget)
            throw CapacityError("generate_disk_mesh: vertex budget exceeded");
    }

    Mesh mesh;
    mesh.domain = DomainDescriptor::disk(radius);
    std::vector<int> ring_start(rings.size());
    for (size_t k = 0; k < rings.size(); ++k) {
        ring_start[k] = mesh.num_vertices();
        append_ring(mesh, rings[k]);
    }
    const int center = mesh.num_vertices();
    mesh.vertices.emplace_back(0.0, 0.0);

    for (size_t k = 0; k + 1 < rings.size(); ++k) {
        if (rings[k].n == rings[k + 1].n)
            emit_same_count_layer(mesh, ring_start[k], rings[k].n, ring_start[k + 1]);
        else
            emit_halving_layer(mesh, ring_start[k], rings[k + 1].n, ring_start[k + 1]);
    }
    emit_fan(mesh, ring_start.back(), rings.back().n, center);

    std::vector<int> loop(rings[0].n);
    for (int i = 0; i < rings[0].n; ++i) loop[i] = i;
    mesh.boundary_loops.push_back(std::move(loop));

    compute_boundary_normals(mesh);
    mesh.h_max = compute_h_max(mesh);
    return mesh;
}

Mesh generate_annulus_mesh(double r_inner, double r_outer, double target_h, int vertex_budget) {
    if (!(r_inner > 0.0) || !(r_inner < r_outer))
        throw ValidationError("generate_annulus_mesh: need 0 < r_inner < r_outer");
    if (!(target_h > 0.0) || !(target_h < r_outer))
        throw ValidationError("generate_annulus_mesh: need 0 < target_h < r_outer");

    const double s_target = 0.85 * target_h;
    long n = kMinRingCount;
    while (2.0 * kPi * r_outer / static_cast<double>(n) > s_target) {
        n *= 2;
        if (n > vertex_budget)
            throw CapacityError("generate_annulus_mesh: boundary ring alone exceeds vertex budget");
    }
    const double s0 = 2.0 * kPi * r_outer / static_cast<double>(n);

    // Geometric radius schedule keeps the radial step proportional to the
    // local azimuthal spacing.
    const int layers =
        std::max<int>(1, static_cast<int>(std::ceil(std::log(r_outer / r_inner) * n / (0.9 * 2.0 * kPi))));
    if ((layers + 1) * n > vertex_budget)
        throw CapacityError("generate_annulus_mesh: vertex budget exceeded");
    const double q = std::pow(r_inner / r_outer, 1.0 / layers);

    Mesh mesh;
    mesh.domain = DomainDescriptor::annulus(r_inner, r_outer);
    std::vector<int> ring_start(layers + 1);
    for (int k = 0; k <= layers; ++k) {
        ring_start[k] = mesh.num_vertices();
        const double r = (k == layers) ? r_inner : r_outer * std::pow(q, k);
        append_ring(mesh, {r, static_cast<int>(n)});
    }
    for (int k = 0; k < layers; ++k)
        emit_same_count_layer(mesh, ring_start[k], static_cast<int>(n), ring_start[k + 1]);

    std::vector<int> outer(n), inner(n);
    for (int i = 0; i < n; ++i) outer[i] = i;
    // Inner loop stored clockwise so the domain lies on the left.
    for (int i = 0; i < n; ++i) inner[i] = ring_start[layers] + (n - i) % n;
    mesh.boundary_loops.push_back(std::move(outer));
    mesh.boundary_loops.push_back(std::move(inner));

    compute_boundary_normals(mesh);
    mesh.h_max = compute_h_max(mesh);
    return mesh;
}

Mesh refine(const Mesh& mesh) {
    Mesh out;
    out.vertices = mesh.vertices;
    out.domain = mesh.domain;

    std::map<EdgeKey, int> boundary_edge_loop;
    for (size_t l = 0; l < mesh.boundary_loops.size(); ++l) {
        const auto& loop = mesh.boundary_loops[l];
        const int n = static_cast<int>(loop.size());
        for (int i = 0; i < n; ++i)
            boundary_edge_loop[edge_key(loop[i], loop[(i + 1) % n])] = static_cast<int>(l);
    }

    auto loop_radius = [&](int l) -> double {
        if (mesh.domain.kind == DomainDescriptor::Kind::Disk) return mesh.domain.r_outer;
        return l == 0 ? mesh.domain.r_outer : mesh.domain.r_inner;
    };

    std::map<EdgeKey, int> midpoint;
    auto mid = [&](int a, int b) -> int {
        const EdgeKey k = edge_key(a, b);
        auto it = midpoint.find(k);
        if (it != midpoint.end()) return it->second;
        Vec2 p = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
        auto bit = boundary_edge_loop.find(k);
        if (bit != boundary_edge_loop.end() && mesh.domain.kind != DomainDescriptor::Kind::None) {
            const double r = loop_radius(bit->second);
            p *= r / p.norm();
        }
        const int idx = out.num_vertices();
        out.vertices.push_back(p);
        midpoint[k] = idx;
        return idx;
    };

    for (const auto& tri : mesh.triangles) {
        const int a = tri[0], b = tri[1], c = tri[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        out.triangles.push_back({a, ab, ca});
        out.triangles.push_back({b, bc, ab});
        out.triangles.push_back({c, ca, bc});
        out.triangles.push_back({ab, bc, ca});
    }

    for (const auto& loop : mesh.boundary_loops) {
        const int n = static_cast<int>(loop.size());
        std::vector<int> new_loop;
        new_loop.reserve(2 * n);
        for (int i = 0; i < n; ++i) {
            new_loop.push_back(loop[i]);
            new_loop.push_back(mid(loop[i], loop[(i + 1) % n]));
        }
        out.boundary_loops.push_back(std::move(new_loop));
    }

    compute_boundary_normals(out);
    out.h_max = compute_h_max(out);
    return out;
}

// --- metric fields ---------------------------------------------------------

struct MetricField::Impl {
    enum class Kind : std::uint8_t { Scaled, ConformalEuclid, General, Perturbed };
    Kind kind = Kind::Scaled;
    double scale = 1.0;
    ScalarExpr phi;
    ScalarExpr g11, g12, g22;
    std::shared_ptr<const Impl> base;
    PerturbationDirection dir;
    double t = 0.0;
};

MetricField::MetricField() : MetricField(euclidean()) {}

MetricField MetricField::euclidean(double scale) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Scaled;
    impl->scale = scale;
    return MetricField(std::move(impl));
}

MetricField MetricField::conformal_euclidean(ScalarExpr phi) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::ConformalEuclid;
    impl->phi = std::move(phi);
    return MetricField(std::move(impl));
}

MetricField MetricField::general(ScalarExpr g11, ScalarExpr g12, ScalarExpr g22) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::General;
    impl->g11 = std::move(g11);
    impl->g12 = std::move(g12);
    impl->g22 = std::move(g22);
    return MetricField(std::move(impl));
}

MetricField MetricField::perturbed(const PerturbationDirection& direction, double t) const {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Perturbed;
    impl->base = impl_;
    impl->dir = direction;
    impl->t = t;
    return MetricField(std::move(impl));
}

Mat2 MetricField::eval(const Vec2& p) const {
    switch (impl_->kind) {
        case Impl::Kind::Scaled:
            return impl_->scale * Mat2::Identity();
        case Impl::Kind::ConformalEuclid:
            return std::exp(2.0 * impl_->phi.eval(p)) * Mat2::Identity();
        case Impl::Kind::General: {
            Mat2 g;
            const double a = impl_->g11.eval(p), b = impl_->g12.eval(p), c = impl_->g22.eval(p);
            g << a, b, b, c;
            return g;
        }
        case Impl::Kind::Perturbed: {
            const MetricField base(impl_->base);
            return base.eval(p) + impl_->t * impl_->dir.tensor_at(base, p);
        }
    }
    return Mat2::Identity();
}

std::array<Mat2, 2> MetricField::eval_derivatives(const Vec2& p) const {
    switch (impl_->kind) {
        case Impl::Kind::Scaled:
            return {Mat2::Zero(), Mat2::Zero()};
        case Impl::Kind::ConformalEuclid: {
            const double e = std::exp(2.0 * impl_->phi.eval(p));
            const Vec2 grad = impl_->phi.gradient(p);
            return {2.0 * grad.x() * e * Mat2::Identity(), 2.0 * grad.y() * e * Mat2::Identity()};
        }
        case Impl::Kind::General: {
            const Vec2 d11 = impl_->g11.gradient(p);
            const Vec2 d12 = impl_->g12.gradient(p);
            const Vec2 d22 = impl_->g22.gradient(p);
            Mat2 dx, dy;
            dx << d11.x(), d12.x(), d12.x(), d22.x();
            dy << d11.y(), d12.y(), d12.y(), d22.y();
            return {dx, dy};
        }
        case Impl::Kind::Perturbed: {
            const MetricField base(impl_->base);
            auto d = base.eval_derivatives(p);
            const auto dh = impl_->dir.tensor_derivatives(base, p);
            d[0] += impl_->t * dh[0];
            d[1] += impl_->t * dh[1];
            return d;
        }
    }
    return {Mat2::Zero(), Mat2::Zero()};
}

std::string MetricField::describe() const {
    std::ostringstream os;
    os.precision(12);
    switch (impl_->kind) {
        case Impl::Kind::Scaled:
            if (impl_->scale == 1.0)
                os << "euclidean";
            else
                os << impl_->scale << "*euclidean";
            break;
        case Impl::Kind::ConformalEuclid:
            os << "exp(2*(" << impl_->phi.describe() << "))*euclidean";
            break;
        case Impl::Kind::General:
            os << "sym[" << impl_->g11.describe() << "; " << impl_->g12.describe() << "; "
               << impl_->g22.describe() << "]";
            break;
        case Impl::Kind::Perturbed:
            os << MetricField(impl_->base).describe() << " + " << impl_->t << "*("
               << impl_->dir.describe() << ")";
            break;
    }
    return os.str();
}

// --- perturbation directions ------------------------------------------------

PerturbationDirection PerturbationDirection::conformal(ScalarExpr sigma) {
    PerturbationDirection d;
    d.kind = Kind::Conformal;
    d.sigma = std::move(sigma);
    return d;
}

PerturbationDirection PerturbationDirection::general(ScalarExpr h11, ScalarExpr h12,
                                                     ScalarExpr h22) {
    PerturbationDirection d;
    d.kind = Kind::General;
    d.h11 = std::move(h11);
    d.h12 = std::move(h12);
    d.h22 = std::move(h22);
    return d;
}

PerturbationDirection PerturbationDirection::zero() {
    return general(ScalarExpr::zero(), ScalarExpr::zero(), ScalarExpr::zero());
}

Mat2 PerturbationDirection::tensor_at(const MetricField& g, const Vec2& p) const {
    if (kind == Kind::Conformal) return sigma.eval(p) * g.eval(p);
    Mat2 h;
    const double a = h11.eval(p), b = h12.eval(p), c = h22.eval(p);
    h << a, b, b, c;
    return h;
}

std::array<Mat2, 2> PerturbationDirection::tensor_derivatives(const MetricField& g,
                                                              const Vec2& p) const {
    if (kind == Kind::Conformal) {
        const double s = sigma.eval(p);
        const Vec2 ds = sigma.gradient(p);
        const Mat2 gm = g.eval(p);
        const auto dg = g.eval_derivatives(p);
        return {ds.x() * gm + s * dg[0], ds.y() * gm + s * dg[1]};
    }
    const Vec2 d11 = h11.gradient(p);
    const Vec2 d12 = h12.gradient(p);
    const Vec2 d22 = h22.gradient(p);
    Mat2 dx, dy;
    dx << d11.x(), d12.x(), d12.x(), d22.x();
    dy << d11.y(), d12.y(), d12.y(), d22.y();
    return {dx, dy};
}

Mat2 PerturbationDirection::inverse_variation_at(const MetricField& g, const Vec2& p) const {
    const Mat2 gi = g.eval(p).inverse();
    return -(gi * tensor_at(g, p) * gi);
}

std::string PerturbationDirection::describe() const {
    if (kind == Kind::Conformal) return "conformal sigma=" + sigma.describe();
    return "general h=[" + h11.describe() + "; " + h12.describe() + "; " + h22.describe() + "]";
}

// --- random conformal sampler ------------------------------------------------

PerturbationDirection sample_random_conformal(std::uint64_t seed, int modes, double amplitude) {
    if (modes < 1) throw ValidationError("sample_random_conformal: modes must be >= 1");
    if (!(amplitude > 0.0)) throw ValidationError("sample_random_conformal: amplitude must be > 0");

    // Wavevector scale: with modes = 3 the angular spectrum on the unit circle
    // stays strong up to harmonic ~10, which is what the splitting experiments
    // on the first few eigenvalue pairs need.
    const double w0 = kPi;

    struct Wave {
        int a, b;
    };
    std::vector<Wave> waves;
    for (int a = 0; a <= modes; ++a) {
        const int bmax = modes - a;
        for (int b = (a == 0 ? 0 : -bmax); b <= bmax; ++b) waves.push_back({a, b});
    }
    int n_terms = 0;
    for (const Wave& w : waves) n_terms += (w.a == 0 && w.b == 0) ? 1 : 2;

    std::mt19937_64 eng(seed ^ 0x9E3779B97F4A7C15ULL);
    auto draw = [&eng]() {
        const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0,1)
        return 2.0 * u - 1.0;
    };

    ScalarExpr sigma;
    for (const Wave& w : waves) {
        const double kx = w0 * w.a, ky = w0 * w.b;
        sigma.add_term({ExprTerm::Kind::Wave, amplitude * draw() / n_terms, 0, 0, kx, ky, 0.0});
        if (!(w.a == 0 && w.b == 0))
            sigma.add_term(
                {ExprTerm::Kind::Wave, amplitude * draw() / n_terms, 0, 0, kx, ky, -kPi / 2.0});
    }
    return PerturbationDirection::conformal(std::move(sigma));
}

// --- SPD validation and arclength --------------------------------------------

namespace {

double min_eig_sym2(const Mat2& g) {
    const double tr = g(0, 0) + g(1, 1);
    const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    return 0.5 * (tr - disc);
}

}  // namespace

SpdReport validate_spd(const MetricField& metric, const Mesh& mesh, int quad_order) {
    SpdReport report;
    report.min_eigenvalue = std::numeric_limits<double>::infinity();

    auto consider = [&](const Vec2& p) {
        const double ev = min_eig_sym2(metric.eval(p));
        if (ev < report.min_eigenvalue) {
            report.min_eigenvalue = ev;
            report.worst_point = p;
        }
    };

    const auto& trule = triangle_rule(quad_order);
    for (const auto& tri : mesh.triangles) {
        const Vec2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
        for (const auto& q : trule) consider(barycentric_point(a, b, c, q));
    }
    const auto& erule = edge_rule();
    for (const auto& loop : mesh.boundary_loops) {
        const int n = static_cast<int>(loop.size());
        for (int i = 0; i < n; ++i) {
            const Vec2 a = mesh.vertices[loop[i]], b = mesh.vertices[loop[(i + 1) % n]];
            for (const auto& q : erule) consider(a + q.t * (b - a));
        }
    }
    report.ok = report.min_eigenvalue > 0.0;
    return report;
}

std::vector<LoopArclength> boundary_arclength(const Mesh& mesh, const MetricField& metric) {
    std::vector<LoopArclength> out;
    const auto& erule = edge_rule();
    for (const auto& loop : mesh.boundary_loops) {
        const int n = static_cast<int>(loop.size());
        LoopArclength la;
        la.s.resize(n);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            la.s[i] = s;
            const Vec2 a = mesh.vertices[loop[i]], b = mesh.vertices[loop[(i + 1) % n]];
            const Vec2 d = b - a;
            const double len = d.norm();
            const Vec2 tau = d / len;
            double edge_len = 0.0;
            for (const auto& q : erule) {
                const Vec2 p = a + q.t * d;
                const Mat2 g = metric.eval(p);
                if (!(g(0, 0) > 0.0) || !(g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) > 0.0))
                    throw ValidationError("boundary_arclength: metric not SPD at quadrature point");
                edge_len += q.w * std::sqrt(tau.dot(g * tau));
            }
            s += edge_len * len;
        }
        la.total = s;
        out.push_back(std::move(la));
    }
    return out;
}

}  // namespace steklov
