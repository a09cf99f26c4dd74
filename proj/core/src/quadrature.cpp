#include "merg/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace merg {

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  if (!(a < b)) throw std::invalid_argument("gauss_legendre: need a < b");

  // Jacobi matrix of the Legendre three-term recurrence: zero diagonal,
  // off-diagonal beta_k = k / sqrt(4k^2 - 1).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd subdiag(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) {
    subdiag[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, subdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("gauss_legendre: tridiagonal eigensolve failed");
  }

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    rule.nodes[i] = mid + half * solver.eigenvalues()[i];
    rule.weights[i] = 2.0 * v0 * v0 * half;
  }
  return rule;
}

}  // namespace merg
