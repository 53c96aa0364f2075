#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace sch {

using Vec2 = Eigen::Vector2d;

// Nodal coefficient vector of a P1 function, indexed by mesh vertices.
using Field = Eigen::VectorXd;

// CSR storage for assembled operators; column-major copies are made where a
// direct solver requires them.
using SpMat  = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SpMatC = Eigen::SparseMatrix<double, Eigen::ColMajor>;

enum class Symmetry { symmetric, general };

// Sparse operator over mesh vertices; roles: M, A, A_X, C_X.
struct SparseOperator {
    SpMat mat;
    Symmetry sym = Symmetry::general;

    int dimension() const { return static_cast<int>(mat.rows()); }
};

} // namespace sch
