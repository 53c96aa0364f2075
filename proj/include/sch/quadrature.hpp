#pragma once

#include <array>
#include <vector>

namespace sch {

// Symmetric quadrature rule on the reference triangle, barycentric points,
// weights normalized to sum to 1 (multiply by the physical area).
struct TriQuadRule {
    int degree = 0;
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;

    int size() const { return static_cast<int>(points.size()); }
};

// Smallest available rule exact for polynomials of total degree >= order.
// Available degrees: 1, 2, 4, 5, 6, 8; requests above 8 throw.
const TriQuadRule& rule_for_order(int order);

} // namespace sch
