#pragma once

// Plain-text mesh exchange. The native format has sections
// VERTICES / TRIANGLES / BOUNDARY_LOOPS (0-based indices) plus an optional
// DOMAIN line carrying the analytic boundary used for refinement projection;
// see README for the exact layout. Triangle-style .node/.ele pairs can be
// imported as well (boundary loops are reconstructed from edge topology).

#include <iosfwd>
#include <string>

#include "steklov/geometry.hpp"

namespace steklov {

void write_mesh(std::ostream& os, const Mesh& mesh);
void write_mesh_file(const std::string& path, const Mesh& mesh);

Mesh read_mesh(std::istream& is);
Mesh read_mesh_file(const std::string& path);

/// Imports the widely used node/ele convention (either 0- or 1-based indices;
/// detected from the first record). Triangles are reoriented CCW and boundary
/// loops are rebuilt from the edges owned by exactly one triangle.
Mesh import_triangle_files(const std::string& node_path, const std::string& ele_path);

}  // namespace steklov
