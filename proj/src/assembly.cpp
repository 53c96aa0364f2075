#include "sch/assembly.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sch/assembly_detail.hpp"
#include "sch/quadrature.hpp"

namespace sch {

namespace {

using Triplet = Eigen::Triplet<double>;

SpMat from_triplets(int n, const std::vector<Triplet>& trips) {
    SpMat m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

// --- adaptive cell moments for the cutoff field ---------------------------
//
// Per triangle: first[a] = int psi_a X dx, second = int X X^T dx (xx, xy, yy).
// The base rule is applied on recursively subdivided triangles until the
// parent estimate agrees with the sum over its 4 children; the tolerance is
// split by area so the per-root-triangle error stays near kMomentTol.

struct CellMoments {
    Vec2 first[3] = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
    double second[3] = {0.0, 0.0, 0.0};

    void operator+=(const CellMoments& o) {
        for (int a = 0; a < 3; ++a) first[a] += o.first[a];
        for (int k = 0; k < 3; ++k) second[k] += o.second[k];
    }
    double max_abs_diff(const CellMoments& o) const {
        double d = 0.0;
        for (int a = 0; a < 3; ++a) {
            d = std::max(d, std::abs(first[a].x() - o.first[a].x()));
            d = std::max(d, std::abs(first[a].y() - o.first[a].y()));
        }
        for (int k = 0; k < 3; ++k) d = std::max(d, std::abs(second[k] - o.second[k]));
        return d;
    }
};

// The error of the transition annulus is concentrated along a curve, so the
// budget is split by /2 per level (the number of active cells doubles, not
// quadruples). The floor stops refinement chasing sub-denormal differences.
constexpr double kMomentTol = 1e-13;
constexpr double kMomentFloor = 3e-17;
constexpr int kMaxDepth = 20;
// Cells straddling the support circle refine unconditionally down to this
// size; below it the unsampled sliver of the paper's cutoff is < 1e-13.
constexpr double kStraddleResolve = 6.25e-5;

// Barycentric coordinates with respect to the root triangle.
struct RootBary {
    Vec2 p0, e1, e2;
    double inv_det;

    RootBary(const Vec2& a, const Vec2& b, const Vec2& c)
        : p0(a), e1(b - a), e2(c - a) {
        inv_det = 1.0 / (e1.x() * e2.y() - e1.y() * e2.x());
    }
    void eval(const Vec2& x, double lam[3]) const {
        const Vec2 d = x - p0;
        lam[1] = (d.x() * e2.y() - d.y() * e2.x()) * inv_det;
        lam[2] = (e1.x() * d.y() - e1.y() * d.x()) * inv_det;
        lam[0] = 1.0 - lam[1] - lam[2];
    }
};

CellMoments estimate(const Vec2& a, const Vec2& b, const Vec2& c,
                     const VectorField& X, const RootBary& bary,
                     const TriQuadRule& rule) {
    CellMoments m;
    const double area =
        0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
    for (int q = 0; q < rule.size(); ++q) {
        const auto& bc = rule.points[q];
        const Vec2 x = bc[0] * a + bc[1] * b + bc[2] * c;
        const Vec2 Xv = X(x);
        double lam[3];
        bary.eval(x, lam);
        const double w = area * rule.weights[q];
        for (int k = 0; k < 3; ++k) m.first[k] += (w * lam[k]) * Xv;
        m.second[0] += w * Xv.x() * Xv.x();
        m.second[1] += w * Xv.x() * Xv.y();
        m.second[2] += w * Xv.y() * Xv.y();
    }
    return m;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double t = std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
    return (a + t * ab - p).norm();
}

bool origin_in_triangle(const Vec2& a, const Vec2& b, const Vec2& c) {
    auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
    const double d0 = cross(b - a, -a);
    const double d1 = cross(c - b, -b);
    const double d2 = cross(a - c, -c);
    return (d0 >= 0 && d1 >= 0 && d2 >= 0) || (d0 <= 0 && d1 <= 0 && d2 <= 0);
}

double origin_distance(const Vec2& a, const Vec2& b, const Vec2& c) {
    if (origin_in_triangle(a, b, c)) return 0.0;
    return std::min({point_segment_distance(Vec2::Zero(), a, b),
                     point_segment_distance(Vec2::Zero(), b, c),
                     point_segment_distance(Vec2::Zero(), c, a)});
}

CellMoments refine(const Vec2& a, const Vec2& b, const Vec2& c,
                   const CellMoments& parent, const VectorField& X,
                   const RootBary& bary, const TriQuadRule& rule, double tol,
                   int depth, double support_radius) {
    bool force = false;
    if (std::isfinite(support_radius)) {
        if (origin_distance(a, b, c) >= support_radius) return CellMoments{};
        const double dmax = std::max({a.norm(), b.norm(), c.norm()});
        const double size =
            std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
        // A straddling cell can hide its inside sliver from every sample
        // point, so the difference estimator alone cannot be trusted here.
        force = dmax > support_radius && size > kStraddleResolve;
    }

    const Vec2 mab = 0.5 * (a + b), mbc = 0.5 * (b + c), mca = 0.5 * (c + a);
    const Vec2 child[4][3] = {{a, mab, mca}, {mab, b, mbc}, {mca, mbc, c}, {mab, mbc, mca}};
    CellMoments est[4];
    CellMoments sum;
    for (int k = 0; k < 4; ++k) {
        est[k] = estimate(child[k][0], child[k][1], child[k][2], X, bary, rule);
        sum += est[k];
    }
    if (depth >= kMaxDepth) return sum;
    if (!force && parent.max_abs_diff(sum) <= std::max(tol, kMomentFloor)) return sum;
    CellMoments out;
    for (int k = 0; k < 4; ++k)
        out += refine(child[k][0], child[k][1], child[k][2], est[k], X, bary, rule,
                      0.5 * tol, depth + 1, support_radius);
    return out;
}

CellMoments cell_moments(const Mesh& mesh, int t, const VectorField& X,
                         const TriQuadRule& rule, double support_radius) {
    const auto& tri = mesh.triangles[t];
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    RootBary bary(a, b, c);
    if (std::isfinite(support_radius) && origin_distance(a, b, c) >= support_radius)
        return CellMoments{};
    const CellMoments est = estimate(a, b, c, X, bary, rule);
    return refine(a, b, c, est, X, bary, rule, kMomentTol, 0, support_radius);
}

} // namespace

SparseOperator assemble_mass(const Mesh& mesh) {
    std::vector<Triplet> trips;
    trips.reserve(9 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double s = triangle_area(mesh, t) / 12.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trips.emplace_back(tri[a], tri[b], (a == b ? 2.0 : 1.0) * s);
    }
    return {from_triplets(mesh.num_vertices(), trips), Symmetry::symmetric};
}

SparseOperator assemble_stiffness(const Mesh& mesh) {
    std::vector<Triplet> trips;
    trips.reserve(9 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto g = basis_gradients(mesh, t);
        const double area = triangle_area(mesh, t);
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) {
                const double v = area * g[a].dot(g[b]);
                trips.emplace_back(tri[a], tri[b], v);
                if (a != b) trips.emplace_back(tri[b], tri[a], v);
            }
    }
    return {from_triplets(mesh.num_vertices(), trips), Symmetry::symmetric};
}

Field basis_integrals(const Mesh& mesh) {
    Field m = Field::Zero(mesh.num_vertices());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double third = triangle_area(mesh, t) / 3.0;
        for (int a = 0; a < 3; ++a) m[mesh.triangles[t][a]] += third;
    }
    return m;
}

std::pair<SparseOperator, SparseOperator> assemble_noise_operators(
    const Mesh& mesh, const VectorField& X, int quad_order, double support_radius) {
    if (quad_order < 3)
        throw std::invalid_argument("assemble_noise_operators: quad_order must be >= 3");
    const TriQuadRule& rule = rule_for_order(quad_order);
    std::vector<Triplet> trips_ax, trips_cx;
    trips_ax.reserve(9 * mesh.num_triangles());
    trips_cx.reserve(9 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto g = basis_gradients(mesh, t);
        const CellMoments m = cell_moments(mesh, t, X, rule, support_radius);
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) {
                const double v =
                    g[a].x() * (m.second[0] * g[b].x() + m.second[1] * g[b].y()) +
                    g[a].y() * (m.second[1] * g[b].x() + m.second[2] * g[b].y());
                trips_ax.emplace_back(tri[a], tri[b], v);
                if (a != b) trips_ax.emplace_back(tri[b], tri[a], v);
            }
        // row i = test function psi_a, column j = grad psi_b . X
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trips_cx.emplace_back(tri[a], tri[b], g[b].dot(m.first[a]));
    }
    return {{from_triplets(mesh.num_vertices(), trips_ax), Symmetry::symmetric},
            {from_triplets(mesh.num_vertices(), trips_cx), Symmetry::general}};
}

SparseOperator assemble_weighted_stiffness(const Mesh& mesh, const VectorField& X,
                                           int quad_order, double support_radius) {
    if (quad_order < 2)
        throw std::invalid_argument("assemble_weighted_stiffness: quad_order must be >= 2");
    return assemble_noise_operators(mesh, X, std::max(quad_order, 3), support_radius).first;
}

SparseOperator assemble_noise_convection(const Mesh& mesh, const VectorField& X,
                                         int quad_order, double support_radius) {
    return assemble_noise_operators(mesh, X, quad_order, support_radius).second;
}

namespace detail {

void element_nonlinear_load(const Mesh& mesh, int t, const Field& u,
                            const TriQuadRule& rule, double out[3]) {
    const auto& tri = mesh.triangles[t];
    const double area = triangle_area(mesh, t);
    out[0] = out[1] = out[2] = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
        const auto& lam = rule.points[q];
        const double uq = lam[0] * u[tri[0]] + lam[1] * u[tri[1]] + lam[2] * u[tri[2]];
        const double f = uq * uq * uq - uq;
        const double w = area * rule.weights[q] * f;
        for (int a = 0; a < 3; ++a) out[a] += w * lam[a];
    }
}

void element_nonlinear_jacobian(const Mesh& mesh, int t, const Field& u,
                                const TriQuadRule& rule, double out[3][3]) {
    const auto& tri = mesh.triangles[t];
    const double area = triangle_area(mesh, t);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out[a][b] = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
        const auto& lam = rule.points[q];
        const double uq = lam[0] * u[tri[0]] + lam[1] * u[tri[1]] + lam[2] * u[tri[2]];
        const double w = area * rule.weights[q] * (3.0 * uq * uq - 1.0);
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) out[a][b] += w * lam[a] * lam[b];
    }
    out[1][0] = out[0][1];
    out[2][0] = out[0][2];
    out[2][1] = out[1][2];
}

} // namespace detail

Field assemble_nonlinear_load(const Mesh& mesh, const Field& u, int quad_order) {
    if (quad_order < 4)
        throw std::invalid_argument("assemble_nonlinear_load: quad_order must be >= 4");
    if (u.size() != mesh.num_vertices())
        throw std::invalid_argument("assemble_nonlinear_load: field size mismatch");
    const TriQuadRule& rule = rule_for_order(quad_order);
    Field b = Field::Zero(mesh.num_vertices());
    double loc[3];
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        detail::element_nonlinear_load(mesh, t, u, rule, loc);
        for (int a = 0; a < 3; ++a) b[mesh.triangles[t][a]] += loc[a];
    }
    return b;
}

SparseOperator assemble_nonlinear_jacobian(const Mesh& mesh, const Field& u,
                                           int quad_order) {
    if (quad_order < 4)
        throw std::invalid_argument("assemble_nonlinear_jacobian: quad_order must be >= 4");
    if (u.size() != mesh.num_vertices())
        throw std::invalid_argument("assemble_nonlinear_jacobian: field size mismatch");
    const TriQuadRule& rule = rule_for_order(quad_order);
    std::vector<Triplet> trips;
    trips.reserve(9 * mesh.num_triangles());
    double loc[3][3];
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        detail::element_nonlinear_jacobian(mesh, t, u, rule, loc);
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) trips.emplace_back(tri[a], tri[b], loc[a][b]);
    }
    return {from_triplets(mesh.num_vertices(), trips), Symmetry::symmetric};
}

} // namespace sch
