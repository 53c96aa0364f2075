#include "sch/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace sch {

Field mean_field(const std::vector<Field>& snapshots) {
    if (snapshots.empty())
        throw std::invalid_argument("mean_field: no realizations");
    Field sum = snapshots[0];
    for (std::size_t i = 1; i < snapshots.size(); ++i) {
        if (snapshots[i].size() != sum.size())
            throw std::invalid_argument("mean_field: mesh mismatch");
        sum += snapshots[i];
    }
    return sum / double(snapshots.size());
}

LevelSet extract_zero_level_set(const Mesh& mesh, const Field& field, double time) {
    LevelSet ls;
    ls.time = time;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        double v[3];
        for (int a = 0; a < 3; ++a) {
            v[a] = field[tri[a]];
            if (v[a] == 0.0) v[a] = 1e-14;   // tie-break exact zeros
        }
        if ((v[0] > 0) == (v[1] > 0) && (v[1] > 0) == (v[2] > 0)) continue;
        std::array<Vec2, 2> seg;
        int found = 0;
        for (int e = 0; e < 3 && found < 2; ++e) {
            const int a = e, b = (e + 1) % 3;
            if ((v[a] > 0) == (v[b] > 0)) continue;
            const double s = v[a] / (v[a] - v[b]);
            seg[found++] =
                mesh.vertices[tri[a]] + s * (mesh.vertices[tri[b]] - mesh.vertices[tri[a]]);
        }
        if (found == 2) ls.segments.push_back(seg);
    }
    return ls;
}

namespace {

double point_to_segments(const Vec2& p, const std::vector<std::array<Vec2, 2>>& segs) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : segs) {
        const Vec2 ab = s[1] - s[0];
        const double len2 = ab.squaredNorm();
        const double t =
            len2 > 0 ? std::clamp(ab.dot(p - s[0]) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (s[0] + t * ab - p).norm());
    }
    return best;
}

double one_sided(const LevelSet& from, const LevelSet& to) {
    double worst = 0.0;
    for (const auto& s : from.segments)
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const Vec2 p = s[0] + t * (s[1] - s[0]);
            worst = std::max(worst, point_to_segments(p, to.segments));
        }
    return worst;
}

} // namespace

double hausdorff_distance(const LevelSet& a, const LevelSet& b) {
    if (a.segments.empty() && b.segments.empty()) return 0.0;
    if (a.segments.empty() || b.segments.empty())
        return std::numeric_limits<double>::infinity();
    return std::max(one_sided(a, b), one_sided(b, a));
}

Vec2 Ellipse::closest_point(const Vec2& p) const {
    // Fold into the first quadrant; candidate points (a cos t, b sin t).
    const double px = std::abs(p.x() - cx), py = std::abs(p.y() - cy);

    // Coarse scan resolves the landscape (at most two local minima), then
    // Newton refines the stationarity condition g(t) = 0.
    auto dist2 = [&](double t) {
        const double dx = a * std::cos(t) - px, dy = b * std::sin(t) - py;
        return dx * dx + dy * dy;
    };
    const int nscan = 64;
    double t = 0.0, best = dist2(0.0);
    for (int i = 1; i <= nscan; ++i) {
        const double ti = (0.5 * M_PI * i) / nscan;
        const double d = dist2(ti);
        if (d < best) {
            best = d;
            t = ti;
        }
    }
    for (int it = 0; it < 60; ++it) {
        const double ct = std::cos(t), st = std::sin(t);
        const double g = (a * a - b * b) * ct * st - px * a * st + py * b * ct;
        const double dg = (a * a - b * b) * (ct * ct - st * st) - px * a * ct - py * b * st;
        if (dg == 0.0) break;
        double tn = t - g / dg;
        tn = std::clamp(tn, 0.0, 0.5 * M_PI);
        if (std::abs(tn - t) < 1e-16) {
            t = tn;
            break;
        }
        t = tn;
    }
    Vec2 q(a * std::cos(t), b * std::sin(t));
    if (p.x() - cx < 0) q.x() = -q.x();
    if (p.y() - cy < 0) q.y() = -q.y();
    return Vec2(cx + q.x(), cy + q.y());
}

double Ellipse::signed_distance(const Vec2& p) const {
    const double d = (p - closest_point(p)).norm();
    const double rx = (p.x() - cx) / a, ry = (p.y() - cy) / b;
    return (rx * rx + ry * ry < 1.0) ? -d : d;
}

ScalarField initial_data_test1() {
    return [](const Vec2& x) {
        const double x1 = x.x(), x2 = x.y();
        const double s1 = 1.0 - x1;
        return x1 * x1 * s1 * s1 * x2 * x2 * (1.0 - x2 * x2);
    };
}

ScalarField initial_data_test2(double epsilon) {
    const Ellipse e{0.0, 0.0, 0.6, 0.2};
    const double scale = 1.0 / (std::sqrt(2.0) * epsilon);
    return [e, scale](const Vec2& x) { return std::tanh(e.signed_distance(x) * scale); };
}

ScalarField initial_data_test3(double epsilon) {
    const Ellipse e1{-0.2, 0.0, 0.15, 0.45};
    const Ellipse e2{0.2, 0.0, 0.15, 0.45};
    const double scale = 1.0 / (std::sqrt(2.0) * epsilon);
    return [e1, e2, scale](const Vec2& x) {
        const double d = std::min(e1.signed_distance(x), e2.signed_distance(x));
        return std::tanh(d * scale);
    };
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

} // namespace

void write_level_set_csv(std::ostream& out, const std::vector<LevelSet>& sets) {
    out << "t,x1a,x2a,x1b,x2b\n";
    for (const auto& ls : sets)
        for (const auto& s : ls.segments)
            out << fmt(ls.time) << "," << fmt(s[0].x()) << "," << fmt(s[0].y()) << ","
                << fmt(s[1].x()) << "," << fmt(s[1].y()) << "\n";
}

void write_series_csv(std::ostream& out, const std::string& value_name,
                      const std::vector<double>& times,
                      const std::vector<double>& values,
                      const std::vector<double>* stderrs) {
    out << "t," << value_name;
    if (stderrs) out << ",stderr";
    out << "\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
        out << fmt(times[i]) << "," << fmt(values[i]);
        if (stderrs) out << "," << fmt((*stderrs)[i]);
        out << "\n";
    }
}

} // namespace sch
