#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "sch/mesh.hpp"
#include "sch/types.hpp"

namespace sch {

// Coefficient-wise average over realizations. Throws on size mismatch.
Field mean_field(const std::vector<Field>& snapshots);

// Unordered segments of the zero-level set, one per crossed triangle.
struct LevelSet {
    double time = 0.0;
    std::vector<std::array<Vec2, 2>> segments;
};

// Marching triangles on the P1 field; vertices exactly at zero are perturbed
// by +1e-14 so every crossing is a strict sign change.
LevelSet extract_zero_level_set(const Mesh& mesh, const Field& field,
                                double time = 0.0);

// Symmetric Hausdorff distance between two segment sets, sampled along the
// segments; empty sets are infinitely far from non-empty ones.
double hausdorff_distance(const LevelSet& a, const LevelSet& b);

// Axis-aligned ellipse (x-cx)^2/a^2 + (y-cy)^2/b^2 = 1.
struct Ellipse {
    double cx = 0.0, cy = 0.0;
    double a = 1.0, b = 1.0;

    Vec2 closest_point(const Vec2& p) const;
    double signed_distance(const Vec2& p) const;   // negative inside
};

using ScalarField = std::function<double(const Vec2&)>;

// Smooth Test-1 polynomial x1^2 (1-x1)^2 x2^2 (1-x2^2).
ScalarField initial_data_test1();
// tanh(d0/(sqrt(2) eps)) profiles; d0 is the exact signed distance.
ScalarField initial_data_test2(double epsilon);
ScalarField initial_data_test3(double epsilon);

// CSV emitters (schema v1).
void write_level_set_csv(std::ostream& out, const std::vector<LevelSet>& sets);
void write_series_csv(std::ostream& out, const std::string& value_name,
                      const std::vector<double>& times,
                      const std::vector<double>& values,
                      const std::vector<double>* stderrs = nullptr);

} // namespace sch
