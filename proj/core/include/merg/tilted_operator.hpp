#pragma once

#include <Eigen/Core>
#include <optional>

#include "merg/markov_model.hpp"
#include "merg/quadrature.hpp"

namespace merg {

struct GridSpec {
  int n = 400;
  std::optional<double> xmax;  // half-width override for the truncated domain

  static GridSpec with_n(int n_) {
    GridSpec g;
    g.n = n_;
    return g;
  }
};

// Finite Nystrom discretization of P_gamma(x,dy) = e^{-gamma xi(y)} P(x,dy)
// on a weighted grid; gamma = +inf carries the indicator tilt 1{xi=0}.
// Row i, column j: transition from node i to node j.
struct TiltedOperator {
  double gamma = 0.0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;    // quadrature weights (ones on finite chains)
  Eigen::VectorXd xi;         // observable on the grid
  Eigen::MatrixXd matrix;     // K[i][j] ~ kernel of P_gamma
  double weight_exponent = 1.0;
  Eigen::VectorXd v_weights;  // V^a(x_i), ones on finite chains
  double mass_defect = 0.0;   // max row-mass loss of the untilted kernel
  bool finite_state = false;

  int size() const { return static_cast<int>(nodes.size()); }
};

// e^{-gamma t} with the P_inf convention at gamma = +inf.
double tilt_factor(double gamma, double xi_value);

// Builds the discretized tilted operator. For AR(1):
//   K[i][j] = w_j e^{-gamma xi(x_j)} p(x_j - alpha x_i)
// For the Knudsen gas: K = alpha (1 (x) tilted-pi-weights) + (1-alpha) U_gamma.
// For finite chains: K = P D_gamma. Throws if the grid holds less than
// 1 - 1e-6 of the kernel/stationary mass (with the required half-width).
TiltedOperator discretize(const MarkovModel& model, double gamma, const GridSpec& grid,
                          double weight_exponent = 1.0);

// sup-norm with weight V^a: max_i |f_i| / V^a(x_i).
double weighted_sup_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& v_weights);

// Exact operator norm between weighted-sup spaces:
//   ||M||_{V^din -> V^dout} = max_i sum_j |M_ij| V^din(x_j) / V^dout(x_i).
double weighted_operator_norm(const Eigen::MatrixXd& m, const Eigen::VectorXd& v_in,
                              const Eigen::VectorXd& v_out);

}  // namespace merg
