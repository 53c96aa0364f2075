#include "sch/mesh.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace sch {

Mesh build_uniform_mesh(int n) {
    if (n < 1)
        throw std::invalid_argument("build_uniform_mesh: n must be >= 1");

    Mesh m;
    const int np = n + 1;
    const double dx = 2.0 / n;
    m.vertices.reserve(np * np);
    m.on_boundary.assign(np * np, 0);

    for (int j = 0; j < np; ++j) {
        for (int i = 0; i < np; ++i) {
            m.vertices.emplace_back(-1.0 + i * dx, -1.0 + j * dx);
            if (i == 0 || j == 0 || i == n || j == n)
                m.on_boundary[j * np + i] = 1;
        }
    }

    auto vid = [np](int i, int j) { return j * np + i; };

    // Diagonals all in the (+1,+1) direction so refinements nest exactly.
    m.triangles.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = vid(i, j);
            const int v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1);
            const int v11 = vid(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }

    m.axis_spacing = dx;
    m.n_subdiv = n;
    m.h = std::sqrt(2.0) * dx;
    return m;
}

double triangle_area(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles.at(t);
    const Vec2 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
    const Vec2 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

std::array<Vec2, 3> basis_gradients(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles.at(t);
    const Vec2& p0 = mesh.vertices[tri[0]];
    const Vec2& p1 = mesh.vertices[tri[1]];
    const Vec2& p2 = mesh.vertices[tri[2]];
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                       (p2.x() - p0.x()) * (p1.y() - p0.y());
    return {Vec2{(p1.y() - p2.y()) / det, (p2.x() - p1.x()) / det},
            Vec2{(p2.y() - p0.y()) / det, (p0.x() - p2.x()) / det},
            Vec2{(p0.y() - p1.y()) / det, (p1.x() - p0.x()) / det}};
}

Vec2 gradient_on_triangle(const Mesh& mesh, int t, const Field& coeffs) {
    if (coeffs.size() != mesh.num_vertices())
        throw std::invalid_argument("gradient_on_triangle: coefficient size mismatch");
    const auto& tri = mesh.triangles.at(t);
    const auto g = basis_gradients(mesh, t);
    return coeffs[tri[0]] * g[0] + coeffs[tri[1]] * g[1] + coeffs[tri[2]] * g[2];
}

void dump_mesh(const Mesh& mesh, std::ostream& out) {
    out << "vertices " << mesh.num_vertices() << "\n";
    for (int i = 0; i < mesh.num_vertices(); ++i)
        out << i << " " << mesh.vertices[i].x() << " " << mesh.vertices[i].y() << " "
            << int(mesh.on_boundary[i]) << "\n";
    out << "triangles " << mesh.num_triangles() << "\n";
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        out << t << " " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
    }
}

} // namespace sch
