#pragma once

#include <cmath>
#include <functional>

#include "sch/types.hpp"

namespace sch {

using VectorField = std::function<Vec2(const Vec2&)>;

// Rotational field with a smooth radial cutoff: X = phi(r) [x2, -x1]^T,
// phi(r) = exp(-0.001/(0.64 - r^2)) for r < 0.8, 0 otherwise.
// div X = 0 and X.n = 0 on the boundary of [-1,1]^2.
struct VectorFieldX {
    static constexpr double support_radius = 0.8;

    static double cutoff(double r) {
        const double s = 0.64 - r * r;
        if (s <= 0.0) return 0.0;
        return std::exp(-0.001 / s);
    }

    Vec2 operator()(const Vec2& x) const {
        const double phi = cutoff(x.norm());
        return Vec2(phi * x.y(), -phi * x.x());
    }
};

inline Vec2 zero_field(const Vec2&) { return Vec2::Zero(); }

} // namespace sch
