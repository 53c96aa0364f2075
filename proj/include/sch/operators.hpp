#pragma once

#include <memory>

#include "sch/assembly.hpp"
#include "sch/mesh.hpp"
#include "sch/types.hpp"
#include "sch/vector_field.hpp"

namespace sch {

// Assembled operators and cached factorizations for one mesh. Immutable after
// construction and shared read-only across Monte Carlo workers.
struct Operators {
    const Mesh* mesh = nullptr;
    SparseOperator M, A, AX, CX;
    Field m;   // basis integrals, (v,1) = m.dot(v)

    Eigen::SimplicialLDLT<SpMatC> M_solver;
    // Constrained Neumann Laplacian [[A, m],[m^T, 0]]; a single Lagrange
    // multiplier row rather than a pinned vertex.
    Eigen::SparseLU<SpMatC> lap_solver;

    double domain_area = 0.0;

    Operators() = default;
    Operators(const Operators&) = delete;
    Operators& operator=(const Operators&) = delete;
};

// Bundles the scheme's operators for the paper's cutoff field (its support
// radius drives the noise-quadrature refinement). X == nullptr leaves AX/CX
// structurally assembled but zero-valued (noise-free runs and tests).
std::shared_ptr<const Operators> build_operators(const Mesh& mesh,
                                                 const VectorFieldX* X = nullptr,
                                                 int quad_order = 4);

double mass(const Operators& ops, const Field& u);              // (u, 1)
double l2_inner(const Operators& ops, const Field& a, const Field& b);
double l2_norm(const Operators& ops, const Field& v);           // sqrt(v'Mv)
double h1_seminorm(const Operators& ops, const Field& v);       // sqrt(v'Av)

// Subtracts (v,1)/|D| from every coefficient.
Field zero_mean_project(const Operators& ops, const Field& v);

// xi = -Lap_h^{-1} zeta: solves A xi = M zeta with (xi,1) = 0, so that
// (grad xi, grad v) = (zeta, v) for all v. Throws on non-zero-mean input.
Field inverse_laplacian(const Operators& ops, const Field& zeta);

// Mesh-dependent H^{-1} norm; the input is zero-mean-projected first.
double h_minus1_norm(const Operators& ops, const Field& zeta);
double h_minus1_inner(const Operators& ops, const Field& a, const Field& b);

// J(u) = int (eps/2)|grad u|^2 + (1/eps) F(u), F(s) = (s^2-1)^2/4; the
// quadrature is exact for the degree-4 integrand at order >= 4.
double discrete_energy(const Mesh& mesh, const Field& u, double epsilon,
                       int quad_order = 4);

} // namespace sch
