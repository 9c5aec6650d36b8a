#include "steklov/mesh_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "steklov/errors.hpp"

namespace steklov {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string next_content_line(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
        const auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        if (line.find_first_not_of(" \t\r\n") != std::string::npos) return line;
    }
    throw ValidationError("mesh file: unexpected end of input");
}

}  // namespace

void write_mesh(std::ostream& os, const Mesh& mesh) {
    os << "# steklov mesh v1\n";
    switch (mesh.domain.kind) {
        case DomainDescriptor::Kind::Disk:
            os << "DOMAIN disk " << fmt(mesh.domain.r_outer) << "\n";
            break;
        case DomainDescriptor::Kind::Annulus:
            os << "DOMAIN annulus " << fmt(mesh.domain.r_inner) << " " << fmt(mesh.domain.r_outer)
               << "\n";
            break;
        case DomainDescriptor::Kind::None:
            break;
    }
    os << "VERTICES " << mesh.num_vertices() << "\n";
    for (const Vec2& v : mesh.vertices) os << fmt(v.x()) << " " << fmt(v.y()) << "\n";
    os << "TRIANGLES " << mesh.num_triangles() << "\n";
    for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
    os << "BOUNDARY_LOOPS " << mesh.boundary_loops.size() << "\n";
    for (const auto& loop : mesh.boundary_loops) {
        os << loop.size();
        for (int v : loop) os << " " << v;
        os << "\n";
    }
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open mesh file for writing: " + path);
    write_mesh(os, mesh);
}

Mesh read_mesh(std::istream& is) {
    Mesh mesh;
    std::string line = next_content_line(is);
    {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "DOMAIN") {
            std::string kind;
            ls >> kind;
            if (kind == "disk") {
                double r;
                ls >> r;
                mesh.domain = DomainDescriptor::disk(r);
            } else if (kind == "annulus") {
                double a, b;
                ls >> a >> b;
                mesh.domain = DomainDescriptor::annulus(a, b);
            } else {
                throw ValidationError("mesh file: unknown DOMAIN kind '" + kind + "'");
            }
            line = next_content_line(is);
        }
    }

    auto expect_section = [&](const std::string& name, const std::string& l) -> long {
        std::istringstream ls(l);
        std::string tag;
        long count = -1;
        ls >> tag >> count;
        if (tag != name || count < 0)
            throw ValidationError("mesh file: expected '" + name + " <count>'");
        return count;
    };

    const long nv = expect_section("VERTICES", line);
    mesh.vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        std::istringstream ls(next_content_line(is));
        double x, y;
        if (!(ls >> x >> y)) throw ValidationError("mesh file: bad vertex line");
        mesh.vertices.emplace_back(x, y);
    }

    const long nt = expect_section("TRIANGLES", next_content_line(is));
    mesh.triangles.reserve(nt);
    for (long i = 0; i < nt; ++i) {
        std::istringstream ls(next_content_line(is));
        int a, b, c;
        if (!(ls >> a >> b >> c)) throw ValidationError("mesh file: bad triangle line");
        mesh.triangles.push_back({a, b, c});
    }

    const long nl = expect_section("BOUNDARY_LOOPS", next_content_line(is));
    for (long i = 0; i < nl; ++i) {
        std::istringstream ls(next_content_line(is));
        long len;
        if (!(ls >> len) || len < 3) throw ValidationError("mesh file: bad loop line");
        std::vector<int> loop(len);
        for (long j = 0; j < len; ++j)
            if (!(ls >> loop[j])) throw ValidationError("mesh file: truncated loop line");
        mesh.boundary_loops.push_back(std::move(loop));
    }

    compute_boundary_normals(mesh);
    mesh.h_max = compute_h_max(mesh);
    validate_mesh(mesh);
    return mesh;
}

Mesh read_mesh_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open mesh file: " + path);
    return read_mesh(is);
}

Mesh import_triangle_files(const std::string& node_path, const std::string& ele_path) {
    std::ifstream ns(node_path);
    if (!ns) throw ValidationError("cannot open node file: " + node_path);
    std::ifstream es(ele_path);
    if (!es) throw ValidationError("cannot open ele file: " + ele_path);

    Mesh mesh;
    long np = 0, dim = 0, nattr = 0, nmark = 0;
    {
        std::istringstream ls(next_content_line(ns));
        ls >> np >> dim >> nattr >> nmark;
        if (np <= 0 || dim != 2) throw ValidationError("node file: expected 2-d point header");
    }
    long base = -1;
    mesh.vertices.resize(np);
    for (long i = 0; i < np; ++i) {
        std::istringstream ls(next_content_line(ns));
        long idx;
        double x, y;
        if (!(ls >> idx >> x >> y)) throw ValidationError("node file: bad point line");
        if (base < 0) base = idx;  // 0- or 1-based, taken from the first record
        const long at = idx - base;
        if (at < 0 || at >= np) throw ValidationError("node file: point index out of range");
        mesh.vertices[at] = Vec2(x, y);
    }

    long nt = 0, per = 0;
    {
        std::istringstream ls(next_content_line(es));
        long a = 0;
        ls >> nt >> per >> a;
        if (nt <= 0 || per < 3) throw ValidationError("ele file: expected triangle header");
    }
    for (long i = 0; i < nt; ++i) {
        std::istringstream ls(next_content_line(es));
        long idx, a, b, c;
        if (!(ls >> idx >> a >> b >> c)) throw ValidationError("ele file: bad triangle line");
        mesh.triangles.push_back(
            {static_cast<int>(a - base), static_cast<int>(b - base), static_cast<int>(c - base)});
    }

    for (int t = 0; t < mesh.num_triangles(); ++t)
        if (triangle_area(mesh, t) < 0.0) std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);

    // Rebuild boundary loops from edges owned by exactly one triangle.
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k], b = tri[(k + 1) % 3];
            edge_count[a < b ? std::make_pair(a, b) : std::make_pair(b, a)] += 1;
        }
    std::map<int, std::vector<int>> adj;
    for (const auto& [key, cnt] : edge_count)
        if (cnt == 1) {
            adj[key.first].push_back(key.second);
            adj[key.second].push_back(key.first);
        }
    for (auto& [v, nb] : adj) {
        if (nb.size() != 2)
            throw ValidationError("imported mesh: non-manifold boundary at vertex " +
                                  std::to_string(v));
        std::sort(nb.begin(), nb.end());
    }

    std::set<int> unvisited;
    for (const auto& [v, nb] : adj) unvisited.insert(v);
    while (!unvisited.empty()) {
        const int start = *unvisited.begin();
        std::vector<int> loop{start};
        unvisited.erase(start);
        int prev = start, cur = adj[start][0];
        while (cur != start) {
            loop.push_back(cur);
            unvisited.erase(cur);
            const auto& nb = adj[cur];
            const int next = (nb[0] == prev) ? nb[1] : nb[0];
            prev = cur;
            cur = next;
        }
        mesh.boundary_loops.push_back(std::move(loop));
    }
    std::sort(mesh.boundary_loops.begin(), mesh.boundary_loops.end(),
              [](const auto& a, const auto& b) {
                  return *std::min_element(a.begin(), a.end()) <
                         *std::min_element(b.begin(), b.end());
              });

    compute_boundary_normals(mesh);
    mesh.h_max = compute_h_max(mesh);
    validate_mesh(mesh);
    return mesh;
}

}  // namespace steklov
