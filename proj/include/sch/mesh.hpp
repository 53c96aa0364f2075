#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "sch/types.hpp"

namespace sch {

// Conforming triangulation of D = [-1,1]^2 with P1 connectivity.
// Immutable after construction; shared read-only by parallel workers.
struct Mesh {
    std::vector<Vec2> vertices;                  // lexicographic by (x2, x1)
    std::vector<std::array<int, 3>> triangles;   // counterclockwise
    std::vector<char> on_boundary;               // per-vertex flag
    double h = 0.0;              // longest edge length
    double axis_spacing = 0.0;   // 2/n for the uniform construction
    int n_subdiv = 0;            // subdivisions per side (0 for hand-built meshes)

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
};

// Uniform diagonal-split mesh with n subdivisions per side. Throws on n < 1.
Mesh build_uniform_mesh(int n);

double triangle_area(const Mesh& mesh, int t);

// Gradients of the three nodal basis functions on triangle t (constant per cell).
std::array<Vec2, 3> basis_gradients(const Mesh& mesh, int t);

// Constant gradient of the P1 interpolant on triangle t; exact for affine data.
Vec2 gradient_on_triangle(const Mesh& mesh, int t, const Field& coeffs);

// Plain-text vertex/triangle listing for debugging; not a stable format.
void dump_mesh(const Mesh& mesh, std::ostream& out);

} // namespace sch
