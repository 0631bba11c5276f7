#include "acpc/linalg.hpp"

#include <algorithm>

namespace acpc {

namespace {

void check_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x,
                    const Eigen::MatrixXd& b, double tol) {
  const double scale = std::max(
      {1.0, b.cwiseAbs().maxCoeff(),
       a.cwiseAbs().rowwise().sum().maxCoeff() * x.cwiseAbs().maxCoeff()});
  const double residual = (a * x - b).cwiseAbs().maxCoeff();
  if (!(residual <= tol * scale)) {
    throw NumericError("linear system is singular or ill-conditioned (relative residual " +
                       std::to_string(residual / scale) + ")");
  }
}

}  // namespace

Eigen::VectorXd lu_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw std::logic_error("lu_solve: dimension mismatch");
  }
  if (a.rows() == 0) return Eigen::VectorXd(0);
  Eigen::VectorXd x = a.partialPivLu().solve(b);
  if (!x.allFinite()) throw NumericError("linear system is singular (non-finite solution)");
  check_residual(a, x, b, tol);
  return x;
}

Eigen::MatrixXd lu_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw std::logic_error("lu_solve: dimension mismatch");
  }
  if (a.rows() == 0) return Eigen::MatrixXd(0, b.cols());
  Eigen::MatrixXd x = a.partialPivLu().solve(b);
  if (!x.allFinite()) throw NumericError("linear system is singular (non-finite solution)");
  check_residual(a, x, b, tol);
  return x;
}

}  // namespace acpc
