#include <doctest.h>

#include <map>
#include <random>

#include "sch/mesh.hpp"
#include "test_util.hpp"

using namespace sch;

TEST_CASE("uniform mesh counts and area") {
    SUBCASE("n=1") {
        const Mesh m = build_uniform_mesh(1);
        CHECK(m.num_vertices() == 4);
        CHECK(m.num_triangles() == 2);
        double area = 0.0;
        for (int t = 0; t < m.num_triangles(); ++t) area += triangle_area(m, t);
        CHECK(area == doctest::Approx(4.0).epsilon(1e-14));
    }
    SUBCASE("n=4") {
        const Mesh m = build_uniform_mesh(4);
        CHECK(m.num_vertices() == 25);
        CHECK(m.num_triangles() == 32);
        double area = 0.0;
        for (int t = 0; t < m.num_triangles(); ++t) {
            CHECK(triangle_area(m, t) > 0.0);
            area += triangle_area(m, t);
        }
        CHECK(std::abs(area - 4.0) < 1e-12);
    }
    SUBCASE("n=64 spacing matches the h = 2/2^6 grid") {
        const Mesh m = build_uniform_mesh(64);
        CHECK(m.axis_spacing == doctest::Approx(2.0 / 64).epsilon(1e-15));
        CHECK(m.h == doctest::Approx(std::sqrt(2.0) * 2.0 / 64).epsilon(1e-15));
    }
    SUBCASE("rejects n=0") {
        CHECK_THROWS_AS(build_uniform_mesh(0), std::invalid_argument);
    }
}

TEST_CASE("mesh geometry invariants") {
    const Mesh m = build_uniform_mesh(8);

    for (const auto& v : m.vertices) {
        CHECK(v.x() >= -1.0);
        CHECK(v.x() <= 1.0);
        CHECK(v.y() >= -1.0);
        CHECK(v.y() <= 1.0);
    }

    // h equals the longest edge.
    double hmax = 0.0;
    for (const auto& tri : m.triangles)
        for (int e = 0; e < 3; ++e)
            hmax = std::max(hmax, (m.vertices[tri[e]] - m.vertices[tri[(e + 1) % 3]]).norm());
    CHECK(m.h == doctest::Approx(hmax).epsilon(1e-15));

    // Conforming: interior edges shared by exactly two triangles, boundary by one.
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : m.triangles)
        for (int e = 0; e < 3; ++e) {
            int a = tri[e], b = tri[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            edge_count[{a, b}]++;
        }
    for (const auto& [edge, count] : edge_count) {
        const bool boundary_edge = m.on_boundary[edge.first] && m.on_boundary[edge.second];
        if (count == 1)
            CHECK(boundary_edge);
        else
            CHECK(count == 2);
    }
}

TEST_CASE("P1 gradients") {
    const Mesh m = build_uniform_mesh(4);

    SUBCASE("constants have zero gradient") {
        const Field ones = Field::Ones(m.num_vertices());
        for (int t = 0; t < m.num_triangles(); ++t)
            CHECK(gradient_on_triangle(m, t, ones).norm() == doctest::Approx(0.0));
    }
    SUBCASE("linear reproduction of x1") {
        const Field f = testutil::interpolate(m, [](const Vec2& x) { return x.x(); });
        for (int t = 0; t < m.num_triangles(); ++t) {
            const Vec2 g = gradient_on_triangle(m, t, f);
            CHECK(g.x() == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(std::abs(g.y()) < 1e-14);
        }
    }
    SUBCASE("affine 2x1 + 3x2") {
        const Field f =
            testutil::interpolate(m, [](const Vec2& x) { return 2 * x.x() + 3 * x.y(); });
        for (int t = 0; t < m.num_triangles(); ++t) {
            const Vec2 g = gradient_on_triangle(m, t, f);
            CHECK(g.x() == doctest::Approx(2.0).epsilon(1e-13));
            CHECK(g.y() == doctest::Approx(3.0).epsilon(1e-13));
        }
    }
    SUBCASE("random affine functions reproduce exactly") {
        std::mt19937 gen(7);
        std::uniform_real_distribution<double> dist(-2.0, 2.0);
        for (int rep = 0; rep < 20; ++rep) {
            const double a = dist(gen), b = dist(gen), c = dist(gen);
            const Field f = testutil::interpolate(
                m, [&](const Vec2& x) { return a + b * x.x() + c * x.y(); });
            for (int t = 0; t < m.num_triangles(); ++t) {
                const Vec2 g = gradient_on_triangle(m, t, f);
                CHECK(std::abs(g.x() - b) < 1e-13);
                CHECK(std::abs(g.y() - c) < 1e-13);
            }
        }
    }
    SUBCASE("index out of range") {
        const Field ones = Field::Ones(m.num_vertices());
        CHECK_THROWS_AS(gradient_on_triangle(m, m.num_triangles(), ones),
                        std::out_of_range);
    }
}
