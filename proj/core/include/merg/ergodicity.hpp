#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "merg/laplace.hpp"
#include "merg/markov_model.hpp"
#include "merg/spectral.hpp"
#include "merg/tilted_operator.hpp"

namespace merg {

// Discrete representation of an initial law mu on the operator grid.
// Weights mode: mu(f) ~ sum_i weights_i f_i. Point mode keeps the location
// and evaluates functions off-grid by Nystrom extension.
struct MuOnGrid {
  bool point_mode = false;
  double x = 0.0;
  Eigen::VectorXd weights;
};

MuOnGrid mu_on_grid(const MarkovModel& model, const TiltedOperator& op,
                    const InitialLaw& initial, const GridSpec& grid);

// Nystrom extension of a grid eigenfunction to an off-grid point:
// f(x) = (1/r) sum_j w_j e^{-gamma xi(x_j)} p(x -> x_j) f_j.
double nystrom_extend(const MarkovModel& model, const TiltedOperator& op,
                      const Eigen::VectorXd& f, double r, double x);

// A(gamma) = mu(e^{-gamma xi} Pi_gamma 1) with the pi_gamma(phi) = 1
// normalization; strictly positive for admissible mu.
double amplitude(const MarkovModel& model, const TiltedOperator& op,
                 const SpectralTriple& triple, const MuOnGrid& mu);

// Laplace series of one tilt for the multiplicative-ergodicity fit.
struct SeriesForFit {
  double gamma = 0.0;
  double amplitude = 0.0;  // A(gamma)
  double rho = 0.0;        // r(gamma)
  std::vector<double> log_values;  // log L^(n), n = 0..N
};

struct FitResult {
  double M = 0.0;
  double theta = 0.0;
  bool spectral_fallback = false;  // residuals at noise floor
  int points_used = 0;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Joint least-squares fit of log|L^(n) - A rho^n| = log M + n log(rho theta)
// over all supplied tilts, robust to oscillating residual signs via the
// residual envelope. Throws FitError when residuals do not decay; falls back
// to theta = fallback_theta when residuals sit at the numerical noise floor.
FitResult fit_mult_ergodicity(const std::vector<SeriesForFit>& series,
                              double fallback_theta);

// ---- critical tilt ----------------------------------------------------------

enum class NuStatus { found, nu_infinite, bad_bracket };

struct NuResult {
  NuStatus status = NuStatus::bad_bracket;
  double nu = 0.0;
  double r_at_infinity = 0.0;
  int evaluations = 0;
};

// Bisection on gamma -> r(gamma) - 1/2 (monotone, unique root). When the
// bracket does not straddle 1/2 the r(infinity) criterion decides between a
// repairable bracket and an infinite nu.
NuResult solve_nu(const MarkovModel& model, const GridSpec& grid,
                  double gamma_lo, double gamma_hi, double tol = 1e-8,
                  int max_iter = 60);

struct CnuResult {
  double formula_value = 0.0;       // -A(nu) / (2 nu r'(nu))
  double direct_value = 0.0;        // Richardson limit of (g-g_Y route)
  double rel_discrepancy = 0.0;
  bool warning = false;             // discrepancy above 5% or a bad series status
  bool direct_ok = false;
};

// C_nu by the eigen-data formula and independently by the one-sided limit of
// (gamma-nu)/gamma * g_Y(gamma, lambda) at gamma = nu (1 + {0.1,0.05,0.025})
// with two-level Richardson extrapolation.
CnuResult c_nu(const MarkovModel& model, const GridSpec& grid, double nu,
               const InitialLaw& mu, double lambda = 2.0, double series_tol = 1e-6);

// ---- Knudsen gas ------------------------------------------------------------

// Laplace-generating data of the U-chain (Z_n) under pi at one tilt.
struct GZSupplier {
  std::function<std::optional<double>(double x)> g;  // g_{Z,pi}(gamma, x); nullopt = divergent
  double marginal = 0.0;       // L_Z(gamma)
  double tilted_radius = 0.0;  // rho(tilde U_gamma)
};

GZSupplier gz_iid(double marginal);
GZSupplier gz_finite(const Eigen::MatrixXd& u, const Eigen::VectorXd& pi,
                     const Eigen::VectorXd& xi, double gamma);

enum class KnudsenLambdaStatus { converged, subcritical };

struct KnudsenLambdaResult {
  KnudsenLambdaStatus status = KnudsenLambdaStatus::subcritical;
  double lambda = 0.0;
  int iterations = 0;
  bool used_bisection_fallback = false;
};

// Solves lambda = alpha g_{Z,pi}(gamma, (1-alpha)/lambda) by fixed-point
// iteration from lambda_0 = alpha L_Z + (1-alpha), with a monotone-bisection
// fallback when the iteration map is not contracting. Leaves with status
// subcritical when the solution would violate lambda > (1-alpha) rho(U_gamma),
// i.e. r(gamma) <= 1 - alpha.
KnudsenLambdaResult knudsen_lambda(double gamma, double alpha, const GZSupplier& gz,
                                   double tol = 1e-12, int max_iter = 10000);

struct NuCriterion {
  bool nu_finite = false;
  double threshold = 0.0;  // 2 alpha g_{Z,pi}(inf, 2(1-alpha)); +inf if divergent
};

// Finiteness of nu for the Knudsen gas with alpha > 1/2: threshold < 1.
// gz_at_infinity must be built at gamma = +inf (zero-mass probabilities).
NuCriterion knudsen_nu_criterion(double alpha, const GZSupplier& gz_at_infinity);

// ---- bounded-jump counter-example ------------------------------------------

struct CounterexampleRow {
  double gamma = 0.0;
  int n = 0;
  double beta = 0.0;
  double far_point = 0.0;
  double lower_bound = 0.0;  // e^{-n gamma beta}
  double mc_estimate = 0.0;  // (P_gamma^n 1_{xi<=beta})(far_point)
};

// Uniform step kernel on [-S, S] with xi(y) = e^{-|y|}: evaluated at a point
// beyond R + nS every path keeps xi <= beta, so the estimate sits above the
// constructive bound and ||P_gamma^n||_inf = 1 despite the tilt.
std::vector<CounterexampleRow> counterexample_demo(double step_bound,
                                                   const std::vector<double>& gammas,
                                                   const std::vector<int>& ns,
                                                   const std::vector<double>& betas,
                                                   std::uint64_t trials, std::uint64_t seed);

}  // namespace merg
