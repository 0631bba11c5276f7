#pragma once

#include <Eigen/Dense>

#include "acpc/types.hpp"

namespace acpc {

// Solves A x = b by partial-pivot LU and verifies the solution by residual:
// ||A x - b||_inf <= tol * max(1, ||b||_inf, ||A||_inf * ||x||_inf).
// A singular or numerically unreliable system raises NumericError with the
// residual; nothing is regularized. This is the single shared numerical
// kernel; it is certified against hand-built systems in the test suite.
Eigen::VectorXd lu_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         double tol = 1e-9);

// Column-wise variant for multiple right-hand sides.
Eigen::MatrixXd lu_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                         double tol = 1e-9);

}  // namespace acpc
