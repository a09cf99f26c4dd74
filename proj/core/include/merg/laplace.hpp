#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "merg/markov_model.hpp"
#include "merg/tilted_operator.hpp"

namespace merg {

enum class LaplaceSource { monte_carlo, oracle_iid, oracle_riccati, oracle_finite, grid_operator };

const char* to_string(LaplaceSource s);

// One value of L_Y^(n)(gamma) = E[exp(-gamma S_n)], S_n = sum_{k=0..n} xi(X_k).
struct LaplaceEstimate {
  double gamma = 0.0;
  int n = 0;
  double value = 0.0;
  double std_error = 0.0;  // 0 for oracles
  std::uint64_t trials = 0;
  LaplaceSource source = LaplaceSource::monte_carlo;
};

// Monte Carlo curve for all horizons 0..n_max from shared paths (prefix
// sums); trials are sharded with derived seeds and pooled in shard order, so
// the result is independent of scheduling.
std::vector<LaplaceEstimate> laplace_mc_curve(const MarkovModel& model,
                                              const InitialLaw& initial, double gamma,
                                              int n_max, std::uint64_t trials,
                                              std::uint64_t seed);

LaplaceEstimate laplace_mc(const MarkovModel& model, const InitialLaw& initial, double gamma,
                           int n, std::uint64_t trials, std::uint64_t seed);

// i.i.d. chain: L^(n) = L(gamma)^(n+1) with L the marginal Laplace transform.
LaplaceEstimate laplace_oracle_iid(double marginal_laplace, double gamma, int n);

// E_pi[e^{-gamma xi(X)}] by quadrature on the law's support.
double marginal_laplace(const DistributionSpec& pi, const Observable& xi, double gamma,
                        int quad_points = 800);

// Gaussian AR(1) with xi(x) = x^2: scalar recursion obtained by iterated
// Gaussian integration,
//   b_m = gamma + alpha^2 b_{m-1} / (1 + 2 sigma^2 b_{m-1}),  b_0 = gamma,
//   c_m = c_{m-1} / sqrt(1 + 2 sigma^2 b_{m-1}),              c_0 = 1,
// with L^(n) = c_n e^{-b_n x^2} from delta_x and
// L^(n) = c_n (1 + 2 b_n s^2)^{-1/2} from the stationary N(0, s^2).
LaplaceEstimate laplace_oracle_riccati(double alpha, double sigma, double gamma, int n,
                                       const InitialLaw& initial);

// Finite chains: mu^T D_gamma (P D_gamma)^n 1 by iterated multiplication.
LaplaceEstimate laplace_oracle_finite(const MarkovModel& model, double gamma, int n,
                                      const InitialLaw& initial);

// ---- Laplace series suppliers ----------------------------------------------

// Supplier of log L^(n)(gamma) for the generating-function machinery; kept in
// log scale so horizons far beyond double underflow stay usable.
class LaplaceSeries {
 public:
  virtual ~LaplaceSeries() = default;
  virtual double log_value(int n) = 0;
  virtual double std_error(int n) { return 0.0; }
  virtual LaplaceSource source() const = 0;
};

std::unique_ptr<LaplaceSeries> make_iid_series(double marginal_laplace);
std::unique_ptr<LaplaceSeries> make_riccati_series(double alpha, double sigma, double gamma,
                                                   const InitialLaw& initial);
std::unique_ptr<LaplaceSeries> make_finite_series(const MarkovModel& model, double gamma,
                                                  const InitialLaw& initial);
// Backed by precomputed Monte Carlo estimates; n beyond the curve throws.
std::unique_ptr<LaplaceSeries> make_mc_series(std::vector<LaplaceEstimate> curve);

// Series evaluated on the Nystrom operator itself (formuleFourier on the
// grid): the route consistent with the discretized spectral radius.
class GridLaplaceSeries : public LaplaceSeries {
 public:
  // mu_weights: discrete representation with mu(f) = sum_i w_i f_i.
  GridLaplaceSeries(const TiltedOperator& op, Eigen::VectorXd mu_weights);
  // Point mass at x (continuous models): Nystrom extension through one
  // kernel row.
  GridLaplaceSeries(const TiltedOperator& op, const MarkovModel& model, double x);

  double log_value(int n) override;
  LaplaceSource source() const override { return LaplaceSource::grid_operator; }

 private:
  void advance_to(int n);

  const TiltedOperator& op_;
  Eigen::VectorXd mu_tilted_;   // mu_i * e^{-gamma xi_i} (weights mode)
  Eigen::VectorXd point_row_;   // kernel row at x (point mode)
  double point_tilt_ = 1.0;
  bool point_mode_ = false;
  Eigen::VectorXd iterate_;     // K^m 1, renormalized
  double log_scale_ = 0.0;
  std::vector<double> cache_;
};

// ---- generating function ----------------------------------------------------

enum class SeriesStatus { finite, divergent, inconclusive };

const char* to_string(SeriesStatus s);

// g_Y(gamma, lambda) = sum_n lambda^n L^(n)(gamma).
struct GeneratingValue {
  double gamma = 0.0;
  double lambda = 0.0;
  SeriesStatus status = SeriesStatus::inconclusive;
  double value = 0.0;            // finite status only
  int truncation_n = 0;
  double truncation_bound = 0.0; // estimated remaining error (finite status)
  double limit_ratio = 0.0;      // stabilized lambda * L^(n+1)/L^(n)
};

// Sums the series until the geometric tail bound drops below tol, completing
// the tail geometrically once the term ratio has stabilized. A window of
// ratios pinned at or above 1 flags divergence; a ratio straddling 1 within
// its own jitter is reported inconclusive rather than resolved either way.
GeneratingValue generating_function(LaplaceSeries& series, double gamma, double lambda,
                                    double tol = 1e-6, int n_max = 200000);

}  // namespace merg
