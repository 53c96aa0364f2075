#pragma once

#include <limits>
#include <utility>

#include "sch/mesh.hpp"
#include "sch/types.hpp"
#include "sch/vector_field.hpp"

namespace sch {

// M_ij = (psi_j, psi_i), exact closed form (area/12 * [[2,1,1],[1,2,1],[1,1,2]]).
SparseOperator assemble_mass(const Mesh& mesh);

// A_ij = (grad psi_j, grad psi_i), exact (piecewise-constant gradients).
SparseOperator assemble_stiffness(const Mesh& mesh);

// Entries int psi_i dx; equals M*1.
Field basis_integrals(const Mesh& mesh);

// (A_X)_ij = (grad psi_j . X, grad psi_i . X). The base rule of the requested
// order is applied on adaptively subdivided triangles: the cutoff in X decays
// to zero across a ~5e-3 wide annulus below r = 0.8, which no fixed rule on
// whole desk-scale triangles resolves. Passing the field's support radius
// turns on exact zeroing of fully-outside cells and forced refinement of
// cells straddling the support boundary (otherwise a thin inside sliver can
// hide between sample points). Symmetric PSD by construction.
SparseOperator assemble_weighted_stiffness(
    const Mesh& mesh, const VectorField& X, int quad_order = 4,
    double support_radius = std::numeric_limits<double>::infinity());

// (C_X)_ij = (grad psi_j . X, psi_i); general (non-symmetric). Same adaptive
// quadrature as A_X; column sums then vanish to ~1e-11 (div X = 0, X.n = 0),
// which the sample-wise mass conservation of the scheme rests on.
SparseOperator assemble_noise_convection(
    const Mesh& mesh, const VectorField& X, int quad_order = 4,
    double support_radius = std::numeric_limits<double>::infinity());

// One moment pass feeding both noise operators.
std::pair<SparseOperator, SparseOperator> assemble_noise_operators(
    const Mesh& mesh, const VectorField& X, int quad_order = 4,
    double support_radius = std::numeric_limits<double>::infinity());

// Entries int (u^3 - u) psi_i dx; exact for quad_order >= 4 (degree-4 integrand).
Field assemble_nonlinear_load(const Mesh& mesh, const Field& u, int quad_order = 4);

// Entries int (3u^2 - 1) psi_j psi_i dx; Newton linearization of the load.
SparseOperator assemble_nonlinear_jacobian(const Mesh& mesh, const Field& u,
                                           int quad_order = 4);

} // namespace sch
