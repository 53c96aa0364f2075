#include <doctest.h>

#include <Eigen/Cholesky>

#include "sch/assembly.hpp"
#include "sch/vector_field.hpp"
#include "test_util.hpp"

using namespace sch;
using testutil::hand_mesh;
using testutil::interpolate;
using testutil::random_field;

TEST_CASE("element mass matrix of the unit right triangle") {
    const Mesh m = hand_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    const SparseOperator M = assemble_mass(m);
    const Eigen::MatrixXd D = Eigen::MatrixXd(M.mat);
    Eigen::Matrix3d ref;
    ref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    ref /= 24.0;
    CHECK((D - ref).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("mass matrix global identities") {
    const Mesh m = build_uniform_mesh(8);
    const SparseOperator M = assemble_mass(m);
    const Field ones = Field::Ones(m.num_vertices());

    CHECK(ones.dot(M.mat * ones) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(((M.mat * ones) - basis_integrals(m)).lpNorm<Eigen::Infinity>() < 1e-15);

    // SPD: Cholesky succeeds.
    SpMatC Mc = M.mat;
    Eigen::SimplicialLLT<SpMatC> chol(Mc);
    CHECK(chol.info() == Eigen::Success);
}

TEST_CASE("stiffness matrix") {
    SUBCASE("two-triangle unit square matches the hand-assembled reference") {
        const Mesh m =
            hand_mesh({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1, 3}, {0, 3, 2}});
        const Eigen::MatrixXd D = Eigen::MatrixXd(assemble_stiffness(m).mat);
        Eigen::Matrix4d ref;
        ref << 1, -0.5, -0.5, 0,
               -0.5, 1, 0, -0.5,
               -0.5, 0, 1, -0.5,
               0, -0.5, -0.5, 1;
        CHECK((D - ref).lpNorm<Eigen::Infinity>() < 1e-15);
    }
    SUBCASE("constants in the kernel and Dirichlet energy of x1") {
        const Mesh m = build_uniform_mesh(8);
        const SparseOperator A = assemble_stiffness(m);
        const Field ones = Field::Ones(m.num_vertices());
        CHECK((A.mat * ones).lpNorm<Eigen::Infinity>() < 1e-13);

        const Field x1 = interpolate(m, [](const Vec2& x) { return x.x(); });
        CHECK(x1.dot(A.mat * x1) == doctest::Approx(4.0).epsilon(1e-13));
    }
}

TEST_CASE("operators are symmetric and PSD") {
    const Mesh m = build_uniform_mesh(16);
    const VectorField X = VectorFieldX{};
    const SparseOperator M = assemble_mass(m);
    const SparseOperator A = assemble_stiffness(m);
    const SparseOperator AX = assemble_weighted_stiffness(m, X, 4, VectorFieldX::support_radius);

    for (const SparseOperator* op : {&M, &A, &AX}) {
        CHECK(op->sym == Symmetry::symmetric);
        SpMat diff = op->mat - SpMat(op->mat.transpose());
        CHECK(testutil::max_abs(diff) < 1e-14);
    }

    for (int rep = 0; rep < 100; ++rep) {
        const Field u = random_field(m.num_vertices(), 100 + rep);
        CHECK(u.dot(A.mat * u) >= -1e-12);
        CHECK(u.dot(AX.mat * u) >= -1e-12);
        CHECK(u.dot(M.mat * u) >= 0.0);
    }
}

TEST_CASE("weighted stiffness with the cutoff field") {
    const Mesh m = build_uniform_mesh(16);
    const VectorField X = VectorFieldX{};
    const SparseOperator AX = assemble_weighted_stiffness(m, X, 4, VectorFieldX::support_radius);

    SUBCASE("zero field gives the zero matrix") {
        const SparseOperator Z = assemble_weighted_stiffness(m, zero_field, 4);
        CHECK(testutil::max_abs(Z.mat) == 0.0);
        const SparseOperator ZC = assemble_noise_convection(m, zero_field, 4);
        CHECK(testutil::max_abs(ZC.mat) == 0.0);
    }

    SUBCASE("rows vanish where the basis support lies in r >= 0.8") {
        // corner vertex (-1,-1): support at distance >= sqrt(2) - h from origin
        int corner = -1;
        for (int i = 0; i < m.num_vertices(); ++i)
            if (m.vertices[i].x() == -1.0 && m.vertices[i].y() == -1.0) corner = i;
        REQUIRE(corner >= 0);
        double row_max = 0.0;
        for (SpMat::InnerIterator it(AX.mat, corner); it; ++it)
            row_max = std::max(row_max, std::abs(it.value()));
        CHECK(row_max == 0.0);
    }

    SUBCASE("A_X kernel contains constants") {
        const Field ones = Field::Ones(m.num_vertices());
        CHECK((AX.mat * ones).lpNorm<Eigen::Infinity>() < 1e-14);
    }
}

TEST_CASE("quadrature stability of A_X and C_X entries") {
    // X is smooth; raising the base order must not move any entry.
    const Mesh m = build_uniform_mesh(16);
    const VectorField X = VectorFieldX{};
    const SpMat AX4 = assemble_weighted_stiffness(m, X, 4, VectorFieldX::support_radius).mat;
    const SpMat AX6 = assemble_weighted_stiffness(m, X, 6, VectorFieldX::support_radius).mat;
    CHECK(testutil::max_abs(SpMat(AX4 - AX6)) < 1e-10);

    const SpMat CX4 = assemble_noise_convection(m, X, 4, VectorFieldX::support_radius).mat;
    const SpMat CX6 = assemble_noise_convection(m, X, 6, VectorFieldX::support_radius).mat;
    CHECK(testutil::max_abs(SpMat(CX4 - CX6)) < 1e-10);
}

TEST_CASE("noise convection structure") {
    const Mesh m = build_uniform_mesh(16);
    const VectorField X = VectorFieldX{};
    const SpMat CX = assemble_noise_convection(m, X, 4, VectorFieldX::support_radius).mat;
    const Field ones = Field::Ones(m.num_vertices());

    // div X = 0 and X.n = 0 make both functionals vanish up to quadrature
    // error; the entry-stability check above pins that error below 1e-10.
    for (int rep = 0; rep < 20; ++rep) {
        const Field u = random_field(m.num_vertices(), 500 + rep);
        CHECK(std::abs(ones.dot(CX * u)) < 1e-9 * u.lpNorm<1>());
        CHECK(std::abs(u.dot(CX * u)) < 1e-9 * u.squaredNorm());
    }
}

TEST_CASE("nonlinear load") {
    const Mesh m = build_uniform_mesh(8);
    const int n = m.num_vertices();
    const SparseOperator M = assemble_mass(m);

    CHECK(assemble_nonlinear_load(m, Field::Zero(n)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(assemble_nonlinear_load(m, Field::Ones(n)).lpNorm<Eigen::Infinity>() < 1e-15);

    // f(2) = 6, so N(2) = 6 * (M 1).
    const Field u2 = 2.0 * Field::Ones(n);
    const Field expected = 6.0 * (M.mat * Field::Ones(n));
    CHECK((assemble_nonlinear_load(m, u2) - expected).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("nonlinear jacobian") {
    const Mesh m = build_uniform_mesh(8);
    const int n = m.num_vertices();
    const SpMat M = assemble_mass(m).mat;

    SUBCASE("constant states") {
        const SpMat J0 = assemble_nonlinear_jacobian(m, Field::Zero(n)).mat;
        CHECK(testutil::max_abs(SpMat(J0 + M)) < 1e-14);
        const SpMat J1 = assemble_nonlinear_jacobian(m, Field::Ones(n)).mat;
        CHECK(testutil::max_abs(SpMat(J1 - 2.0 * M)) < 1e-13);
    }

    SUBCASE("central differences of N converge at second order") {
        const Field u = random_field(n, 11);
        const Field v = random_field(n, 12);
        const SpMat J = assemble_nonlinear_jacobian(m, u).mat;
        auto fd_error = [&](double eps) {
            const Field fd = (assemble_nonlinear_load(m, u + eps * v) -
                              assemble_nonlinear_load(m, u - eps * v)) /
                             (2.0 * eps);
            return (fd - J * v).lpNorm<Eigen::Infinity>();
        };
        const double e1 = fd_error(1e-3);
        const double e2 = fd_error(5e-4);
        CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
    }
}
