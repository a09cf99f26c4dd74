#include "merg/report.hpp"

#include <cmath>
#include <memory>

#include "merg/parallel.hpp"

namespace merg {

namespace {

bool riccati_applicable(const MarkovModel& model, const InitialLaw& initial) {
  const auto* ar = model.as_ar1();
  return ar != nullptr && ar->noise.family() == NoiseSpec::Family::gaussian &&
         (model.xi().kind() == Observable::Kind::quadratic ||
          (model.xi().kind() == Observable::Kind::power &&
           model.xi().power_exponent() == 2.0 && model.xi().power_scale() == 1.0)) &&
         initial.kind() != InitialLaw::Kind::law;
}

// Independent (non-spectral) Laplace route for one tilt: closed-form oracles
// where the model admits one, Monte Carlo otherwise.
std::unique_ptr<LaplaceSeries> independent_series(const MarkovModel& model,
                                                  const InitialLaw& initial, double gamma,
                                                  int horizons, std::uint64_t trials,
                                                  std::uint64_t seed, std::string* route) {
  if (model.is_iid() && model.as_knudsen() != nullptr) {
    *route = "oracle_iid";
    return make_iid_series(marginal_laplace(model.iid_marginal(), model.xi(), gamma));
  }
  if (riccati_applicable(model, initial)) {
    *route = "oracle_riccati";
    const auto* ar = model.as_ar1();
    return make_riccati_series(ar->alpha, ar->noise.sigma(), gamma, initial);
  }
  if (model.is_finite()) {
    *route = "oracle_finite";
    return make_finite_series(model, gamma, initial);
  }
  *route = "monte_carlo";
  return make_mc_series(laplace_mc_curve(model, initial, gamma, horizons, trials, seed));
}

}  // namespace

ErgodicityReport build_report(const MarkovModel& model, const ReportOptions& opts) {
  if (opts.gammas.empty()) throw std::invalid_argument("report: no tilts supplied");
  if (opts.fit_horizons < 8) throw std::invalid_argument("report: need at least 8 horizons");

  ErgodicityReport rep;
  rep.initial_law = opts.initial.describe();
  rep.points.resize(opts.gammas.size());
  std::vector<SeriesForFit> fit_series(opts.gammas.size());
  std::vector<std::string> point_warnings(opts.gammas.size());

  parallel_for(0, opts.gammas.size(), [&](std::size_t idx) {
    const double gamma = opts.gammas[idx];
    GammaPoint& pt = rep.points[idx];
    pt.gamma = gamma;

    const TiltedOperator op = discretize(model, gamma, opts.grid);
    const SpectralTriple triple = perron(op);
    pt.rho = triple.r;
    pt.sub_modulus = triple.sub_modulus;
    pt.residual = triple.residual;

    const MuOnGrid mu = mu_on_grid(model, op, opts.initial, opts.grid);
    pt.amplitude = amplitude(model, op, triple, mu);
    pt.r_prime = triple.r > 0.0 ? r_derivative(op, triple) : 0.0;

    auto series = independent_series(model, opts.initial, gamma, opts.fit_horizons,
                                     opts.mc_trials, opts.seed, &pt.route);
    SeriesForFit& sf = fit_series[idx];
    sf.gamma = gamma;
    sf.log_values.resize(static_cast<std::size_t>(opts.fit_horizons));
    for (int n = 0; n < opts.fit_horizons; ++n) {
      sf.log_values[static_cast<std::size_t>(n)] = series->log_value(n);
    }

    // rho == r cross-check: tail ratio of the independent route.
    const int tail = opts.fit_horizons - 1;
    pt.implied_rho = std::exp(series->log_value(tail) - series->log_value(tail - 1));

    // The fit is about the series' own multiplicative structure, so its
    // (A, rho) come from the series tail; the route gap below ties them to
    // the spectral values.
    const double log_rho_fit = series->log_value(tail) - series->log_value(tail - 1);
    sf.rho = std::exp(log_rho_fit);
    sf.amplitude = std::exp(series->log_value(tail) - tail * log_rho_fit);
    double allowed = 1e-4;
    if (pt.route == "monte_carlo") {
      const double l0 = std::exp(series->log_value(tail - 1));
      const double l1 = std::exp(series->log_value(tail));
      const double se0 = series->std_error(tail - 1);
      const double se1 = series->std_error(tail);
      if (l0 > 0.0 && l1 > 0.0) {
        allowed = std::max(allowed, 3.0 * pt.implied_rho * (se0 / l0 + se1 / l1));
      } else {
        allowed = 1.0;  // Monte Carlo dead zone; no usable ratio
      }
    }
    if (std::abs(pt.implied_rho - pt.rho) > allowed) {
      point_warnings[idx] = "route disagreement at gamma=" + std::to_string(gamma) +
                            ": spectral rho=" + std::to_string(pt.rho) + " vs " + pt.route +
                            " ratio=" + std::to_string(pt.implied_rho);
    }
  });

  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    rep.max_route_gap =
        std::max(rep.max_route_gap, std::abs(rep.points[i].implied_rho - rep.points[i].rho));
    if (!point_warnings[i].empty()) rep.warnings.push_back(point_warnings[i]);
  }

  // Fit over the tilts with a positive radius.
  std::vector<SeriesForFit> usable;
  double fallback_theta = 0.0;
  for (std::size_t i = 0; i < fit_series.size(); ++i) {
    const SeriesForFit& sf = fit_series[i];
    const bool series_ok = std::isfinite(sf.rho) && sf.rho > 0.0 &&
                           std::isfinite(sf.amplitude) && sf.amplitude > 0.0;
    if (rep.points[i].rho > 1e-12 && series_ok) {
      usable.push_back(sf);
      fallback_theta = std::max(fallback_theta, rep.points[i].sub_modulus / rep.points[i].rho);
    }
  }
  if (!usable.empty()) {
    try {
      const FitResult fit = fit_mult_ergodicity(usable, fallback_theta);
      rep.fit_M = fit.M;
      rep.fit_theta = fit.theta;
      rep.fit_spectral_fallback = fit.spectral_fallback;
    } catch (const FitError& e) {
      rep.warnings.push_back(e.what());
    }
  }

  const NuResult nu =
      solve_nu(model, opts.grid, opts.nu_bracket_lo, opts.nu_bracket_hi, opts.nu_tol);
  rep.nu = nu;
  if (nu.status == NuStatus::found) {
    rep.cnu = c_nu(model, opts.grid, nu.nu, opts.initial, opts.lambda, opts.series_tol);
    rep.cnu_computed = true;
    if (rep.cnu.warning) {
      rep.warnings.push_back("c_nu two-route discrepancy " +
                             std::to_string(rep.cnu.rel_discrepancy));
    }
  }
  return rep;
}

std::vector<CurvePoint> spectral_curve(const MarkovModel& model,
                                       const std::vector<double>& gammas,
                                       const GridSpec& grid) {
  std::vector<CurvePoint> out(gammas.size());
  parallel_for(0, gammas.size(), [&](std::size_t idx) {
    const TiltedOperator op = discretize(model, gammas[idx], grid);
    const SpectralTriple triple = perron(op);
    CurvePoint& p = out[idx];
    p.gamma = gammas[idx];
    p.r = triple.r;
    p.r_prime = triple.r > 0.0 ? r_derivative(op, triple) : 0.0;
    p.sub_modulus = triple.sub_modulus;
    p.residual = triple.residual;
    p.grid_n = op.size();
    p.x_max = op.finite_state ? 0.0 : std::max(std::abs(op.nodes[0]), std::abs(op.nodes[op.size() - 1]));
  });
  return out;
}

}  // namespace merg
