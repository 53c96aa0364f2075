#pragma once

#include "sch/mesh.hpp"
#include "sch/quadrature.hpp"
#include "sch/types.hpp"

namespace sch::detail {

// Element contributions of the cubic load f(u) = u^3 - u and its
// linearization f'(u) = 3u^2 - 1; shared by assembly and the stepper's
// in-place Jacobian updates.
void element_nonlinear_load(const Mesh& mesh, int t, const Field& u,
                            const TriQuadRule& rule, double out[3]);
void element_nonlinear_jacobian(const Mesh& mesh, int t, const Field& u,
                                const TriQuadRule& rule, double out[3][3]);

} // namespace sch::detail
