#pragma once

#include <Eigen/Core>

namespace merg {

// Nodes and weights of a quadrature rule on [a, b].
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(nodes.size()); }

  // Integrates the grid function f against the rule.
  double integrate(const Eigen::VectorXd& f) const { return weights.dot(f); }
};

// n-point Gauss-Legendre rule on [a, b], computed by Golub-Welsch
// (eigendecomposition of the Jacobi matrix of Legendre polynomials).
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace merg
