#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "merg/ergodicity.hpp"

namespace merg {

struct ReportOptions {
  GridSpec grid;
  std::vector<double> gammas;
  InitialLaw initial = InitialLaw::stationary();
  double nu_bracket_lo = 0.01;
  double nu_bracket_hi = 8.0;
  double nu_tol = 1e-8;
  double lambda = 2.0;
  int fit_horizons = 25;
  std::uint64_t mc_trials = 100000;
  std::uint64_t seed = 1;
  double series_tol = 1e-6;
};

struct GammaPoint {
  double gamma = 0.0;
  double rho = 0.0;       // spectral radius of the discretized tilted operator
  double amplitude = 0.0;
  double r_prime = 0.0;
  double sub_modulus = 0.0;
  double residual = 0.0;
  double implied_rho = 0.0;  // tail ratio L^(n+1)/L^(n) of the independent route
  std::string route;         // independent route used for this tilt
};

// The headline quantities of one model: the ergodicity curve with its fit,
// the critical tilt and C_nu, plus cross-route diagnostics.
struct ErgodicityReport {
  std::vector<GammaPoint> points;
  double fit_M = 0.0;
  double fit_theta = 0.0;
  bool fit_spectral_fallback = false;
  NuResult nu;
  CnuResult cnu;  // valid when nu.status == found
  bool cnu_computed = false;
  double max_route_gap = 0.0;  // max |implied_rho - rho| over the curve
  std::vector<std::string> warnings;
  std::string initial_law;
};

ErgodicityReport build_report(const MarkovModel& model, const ReportOptions& opts);

// One row of the spectral curve CSV.
struct CurvePoint {
  double gamma = 0.0;
  double r = 0.0;
  double r_prime = 0.0;
  double sub_modulus = 0.0;
  double residual = 0.0;
  int grid_n = 0;
  double x_max = 0.0;
};

std::vector<CurvePoint> spectral_curve(const MarkovModel& model,
                                       const std::vector<double>& gammas,
                                       const GridSpec& grid);

}  // namespace merg
