#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "merg/tilted_operator.hpp"

namespace merg {

// Raised when the computed dominant pair is not positive where the theory
// guarantees positivity (finite tilt, strictly positive kernel).
struct PerronPositivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PerronNonConvergence : std::runtime_error {
  PerronNonConvergence(const std::string& msg, double oscillation)
      : std::runtime_error(msg), ratio_oscillation(oscillation) {}
  double ratio_oscillation;
};

// Dominant eigen-data of one tilted operator: r(gamma) with right
// eigenfunction phi (pi_gamma(phi) = 1) and left eigenmeasure pi_gamma
// (total mass 1), plus the deflated second-modulus estimate.
struct SpectralTriple {
  double r = 0.0;
  Eigen::VectorXd phi;
  Eigen::VectorXd pi_weights;
  double sub_modulus = 0.0;
  double residual = 0.0;       // ||K phi - r phi|| in the V^a-sup norm
  double left_residual = 0.0;  // ||pi^T K - r pi^T||_1
  int iterations = 0;
  bool converged = false;

  // pi_gamma(f) as a discrete measure.
  double pi(const Eigen::VectorXd& f) const { return pi_weights.dot(f); }
};

// Two-sided power iteration started from the positive vector V^{-a} 1;
// the left chain runs on the transpose. Throws PerronNonConvergence with the
// last ratio oscillation when max_iter is exhausted (tied or complex
// dominant eigenvalues).
SpectralTriple perron(const TiltedOperator& op, double tol = 1e-10, int max_iter = 100000);

// Rank-one eigenprojector: f -> pi_gamma(f) phi (with pi_gamma(phi) = 1).
Eigen::VectorXd projector_apply(const SpectralTriple& triple, const Eigen::VectorXd& f);

// r'(gamma) = -r * pi_gamma(xi phi) / pi_gamma(phi), from first-order
// perturbation of the eigenvalue equation.
double r_derivative(const TiltedOperator& op, const SpectralTriple& triple);

struct DriftReport {
  bool holds = false;
  double L_constant = 0.0;
  // Measured slope of the {xi > beta}/{xi <= beta} split, scaled so that the
  // drift inequality gives leading_coeff <= e^{-gamma beta} * delta.
  double leading_coeff = 0.0;
};

// Checks P_gamma V <= e^{-gamma beta} delta V + L 1 on the grid and returns
// the smallest admissible L. Requires delta > |alpha|^r0.
DriftReport drift_check(const MarkovModel& model, double gamma, double beta, double delta,
                        const GridSpec& grid);

struct ContinuityBound {
  double measured_norm = 0.0;  // ||K(gamma) - K(gamma')|| : V^a -> V^{a+b}
  double lemma_bound = 0.0;    // (c |gamma - gamma'|)^b ||K(0)||_{V^{a+b}}
};

// Discretized operator-norm continuity of gamma -> P_gamma between weighted
// spaces; requires the observable's sup xi/V bound.
ContinuityBound continuity_modulus(const MarkovModel& model, double gamma, double gamma_prime,
                                   double a, double b, const GridSpec& grid);

}  // namespace merg
