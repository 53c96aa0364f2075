#include "sch/operators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sch/quadrature.hpp"

namespace sch {

std::shared_ptr<const Operators> build_operators(const Mesh& mesh, const VectorFieldX* X,
                                                 int quad_order) {
    auto ops = std::make_shared<Operators>();
    ops->mesh = &mesh;
    ops->M = assemble_mass(mesh);
    ops->A = assemble_stiffness(mesh);
    ops->m = basis_integrals(mesh);
    ops->domain_area = ops->m.sum();

    const VectorField field = X ? *X : VectorField(zero_field);
    const double radius =
        X ? VectorFieldX::support_radius : std::numeric_limits<double>::infinity();
    std::tie(ops->AX, ops->CX) =
        assemble_noise_operators(mesh, field, std::max(quad_order, 3), radius);

    SpMatC Mc = ops->M.mat;
    ops->M_solver.compute(Mc);
    if (ops->M_solver.info() != Eigen::Success)
        throw std::runtime_error("build_operators: mass matrix factorization failed");

    // [[A, m],[m^T, 0]] on N+1 unknowns.
    const int n = mesh.num_vertices();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(ops->A.mat.nonZeros() + 2 * n);
    for (int i = 0; i < n; ++i)
        for (SpMat::InnerIterator it(ops->A.mat, i); it; ++it)
            trips.emplace_back(i, it.col(), it.value());
    for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, n, ops->m[i]);
        trips.emplace_back(n, i, ops->m[i]);
    }
    SpMatC lap(n + 1, n + 1);
    lap.setFromTriplets(trips.begin(), trips.end());
    lap.makeCompressed();
    ops->lap_solver.compute(lap);
    if (ops->lap_solver.info() != Eigen::Success)
        throw std::runtime_error("build_operators: constrained Laplacian factorization failed");

    return ops;
}

double mass(const Operators& ops, const Field& u) { return ops.m.dot(u); }

double l2_inner(const Operators& ops, const Field& a, const Field& b) {
    return a.dot(ops.M.mat * b);
}

double l2_norm(const Operators& ops, const Field& v) {
    return std::sqrt(std::max(0.0, l2_inner(ops, v, v)));
}

double h1_seminorm(const Operators& ops, const Field& v) {
    return std::sqrt(std::max(0.0, v.dot(ops.A.mat * v)));
}

Field zero_mean_project(const Operators& ops, const Field& v) {
    return v.array() - mass(ops, v) / ops.domain_area;
}

Field inverse_laplacian(const Operators& ops, const Field& zeta) {
    const double mean = std::abs(mass(ops, zeta));
    if (mean > 1e-10 * std::max(l2_norm(ops, zeta), 1e-300))
        throw std::invalid_argument("inverse_laplacian: input is not zero-mean");

    const int n = ops.mesh->num_vertices();
    Field rhs(n + 1);
    rhs.head(n) = ops.M.mat * zeta;
    rhs[n] = 0.0;
    Field sol = ops.lap_solver.solve(rhs);
    if (ops.lap_solver.info() != Eigen::Success)
        throw std::runtime_error("inverse_laplacian: solve failed");
    return sol.head(n);
}

double h_minus1_norm(const Operators& ops, const Field& zeta) {
    const Field z = zero_mean_project(ops, zeta);
    const Field xi = inverse_laplacian(ops, z);
    return std::sqrt(std::max(0.0, z.dot(ops.M.mat * xi)));
}

double h_minus1_inner(const Operators& ops, const Field& a, const Field& b) {
    const Field za = zero_mean_project(ops, a);
    const Field zb = zero_mean_project(ops, b);
    return za.dot(ops.M.mat * inverse_laplacian(ops, zb));
}

double discrete_energy(const Mesh& mesh, const Field& u, double epsilon,
                       int quad_order) {
    const TriQuadRule& rule = rule_for_order(std::max(quad_order, 4));
    double J = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = triangle_area(mesh, t);
        const Vec2 grad = gradient_on_triangle(mesh, t, u);
        J += area * 0.5 * epsilon * grad.squaredNorm();
        double pot = 0.0;
        for (int q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const double uq = lam[0] * u[tri[0]] + lam[1] * u[tri[1]] + lam[2] * u[tri[2]];
            const double s = uq * uq - 1.0;
            pot += rule.weights[q] * 0.25 * s * s;
        }
        J += area * pot / epsilon;
    }
    return J;
}

} // namespace sch
