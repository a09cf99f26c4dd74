#include "merg/ergodicity.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <random>

#include "merg/rng_util.hpp"

namespace merg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gaussian_density(double x, double sd) {
  return std::exp(-0.5 * x * x / (sd * sd)) / (sd * std::sqrt(2.0 * 3.14159265358979323846));
}

}  // namespace

MuOnGrid mu_on_grid(const MarkovModel& model, const TiltedOperator& op,
                    const InitialLaw& initial, const GridSpec& grid) {
  MuOnGrid mu;
  const int n = op.size();

  if (initial.kind() == InitialLaw::Kind::point) {
    if (op.finite_state) {
      const int i = static_cast<int>(std::llround(initial.point_value()));
      if (i < 0 || i >= n) throw std::invalid_argument("mu_on_grid: point outside finite chain");
      mu.weights = Eigen::VectorXd::Zero(n);
      mu.weights[i] = 1.0;
      return mu;
    }
    mu.point_mode = true;
    mu.x = initial.point_value();
    return mu;
  }

  if (initial.kind() == InitialLaw::Kind::law) {
    if (op.finite_state) {
      throw std::invalid_argument("mu_on_grid: density initial law unsupported on finite chains");
    }
    mu.weights.resize(n);
    for (int i = 0; i < n; ++i) {
      mu.weights[i] = op.weights[i] * initial.dist().density(op.nodes[i]);
    }
    mu.weights /= mu.weights.sum();  // probability measure modulo truncation
    return mu;
  }

  // stationary
  if (op.finite_state) {
    mu.weights = model.stationary_vector();
    return mu;
  }
  if (const auto* k = model.as_knudsen()) {
    mu.weights.resize(n);
    for (int i = 0; i < n; ++i) mu.weights[i] = op.weights[i] * k->pi.density(op.nodes[i]);
    mu.weights /= mu.weights.sum();
    return mu;
  }
  const auto* ar = model.as_ar1();
  if (ar && ar->noise.family() == NoiseSpec::Family::gaussian) {
    const double sd = ar1_gaussian_stationary_sd(*ar);
    mu.weights.resize(n);
    for (int i = 0; i < n; ++i) {
      mu.weights[i] = op.weights[i] * gaussian_density(op.nodes[i], sd);
    }
    mu.weights /= mu.weights.sum();
    return mu;
  }
  // No closed form: the left Perron vector of the untilted operator is the
  // grid stationary measure.
  const TiltedOperator base = discretize(model, 0.0, grid, op.weight_exponent);
  const SpectralTriple t = perron(base);
  mu.weights = t.pi_weights;
  return mu;
}

double nystrom_extend(const MarkovModel& model, const TiltedOperator& op,
                      const Eigen::VectorXd& f, double r, double x) {
  if (op.finite_state) {
    const int i = static_cast<int>(std::llround(x));
    return f[i];
  }
  if (!(r > 0.0)) throw std::invalid_argument("nystrom_extend: needs r > 0");
  double acc = 0.0;
  for (int j = 0; j < op.size(); ++j) {
    acc += op.weights[j] * tilt_factor(op.gamma, op.xi[j]) *
           transition_density(model, x, op.nodes[j]) * f[j];
  }
  return acc / r;
}

double amplitude(const MarkovModel& model, const TiltedOperator& op,
                 const SpectralTriple& triple, const MuOnGrid& mu) {
  if (!triple.converged) throw std::invalid_argument("amplitude: triple not converged");
  // Pi_gamma 1 = pi_gamma(1) phi = phi under the mass-1 / pi(phi)=1 scalings.
  double a;
  if (mu.point_mode) {
    const double phix = nystrom_extend(model, op, triple.phi, triple.r, mu.x);
    a = tilt_factor(op.gamma, model.xi()(mu.x)) * phix;
  } else {
    double acc = 0.0;
    for (int i = 0; i < op.size(); ++i) {
      acc += mu.weights[i] * tilt_factor(op.gamma, op.xi[i]) * triple.phi[i];
    }
    a = acc;
  }
  if (!(a > 0.0)) {
    throw std::runtime_error("amplitude: mu(e^{-gamma xi} Pi_gamma 1) is not positive");
  }
  return a;
}

FitResult fit_mult_ergodicity(const std::vector<SeriesForFit>& series, double fallback_theta) {
  if (series.empty()) throw std::invalid_argument("fit: no series supplied");

  struct Point {
    double n;
    double y;  // log e_n - n log rho
  };
  std::vector<Point> pts;
  std::vector<std::pair<double, double>> all_residuals;  // (n, log e_n - n log rho)

  for (const auto& s : series) {
    if (s.log_values.size() < 8) {
      throw std::invalid_argument("fit: need at least 8 horizons per tilt");
    }
    if (!(s.rho > 0.0)) throw std::invalid_argument("fit: rho must be positive on K");
    const int count = static_cast<int>(s.log_values.size());
    std::vector<double> e(static_cast<std::size_t>(count));
    double scale = 0.0;
    for (int n = 0; n < count; ++n) {
      const double l = std::exp(s.log_values[static_cast<std::size_t>(n)]);
      e[static_cast<std::size_t>(n)] = std::abs(l - s.amplitude * std::pow(s.rho, n));
      scale = std::max(scale, l);
    }
    const double floor = 1e-13 * std::max(scale, s.amplitude);

    // Envelope: local maxima track M (rho theta)^n even when the residual
    // sign oscillates through zero (complex second eigenvalue).
    for (int n = 0; n < count; ++n) {
      const double en = e[static_cast<std::size_t>(n)];
      if (en <= floor) continue;
      const bool left_ok = n == 0 || e[static_cast<std::size_t>(n - 1)] <= en;
      const bool right_ok = n == count - 1 || e[static_cast<std::size_t>(n + 1)] <= en;
      const double y = std::log(en) - n * std::log(s.rho);
      all_residuals.emplace_back(n, y);
      if (left_ok || right_ok) pts.push_back({static_cast<double>(n), y});
    }
  }

  FitResult fit;
  if (pts.size() < 4) {
    // Residuals at numerical noise: report the spectral-gap proxy instead.
    fit.spectral_fallback = true;
    fit.theta = std::min(std::max(fallback_theta, 1e-300), 1.0 - 1e-12);
    fit.M = 1.0;
    fit.points_used = static_cast<int>(pts.size());
    return fit;
  }

  double sn = 0.0, sy = 0.0, snn = 0.0, sny = 0.0;
  for (const auto& p : pts) {
    sn += p.n;
    sy += p.y;
    snn += p.n * p.n;
    sny += p.n * p.y;
  }
  const double m = static_cast<double>(pts.size());
  const double denom = m * snn - sn * sn;
  if (denom <= 0.0) throw FitError("fit: degenerate horizon set");
  const double slope = (m * sny - sn * sy) / denom;
  const double theta = std::exp(slope);
  if (!(theta < 1.0)) {
    throw FitError("fit: residuals do not decay (fitted theta = " + std::to_string(theta) +
                   " >= 1); multiplicative ergodicity violated on this range");
  }

  // Smallest M covering every residual at the fitted theta.
  double log_m = -kInf;
  for (const auto& [n, y] : all_residuals) {
    log_m = std::max(log_m, y - n * slope);
  }
  fit.theta = theta;
  fit.M = std::exp(log_m);
  fit.points_used = static_cast<int>(pts.size());
  return fit;
}

NuResult solve_nu(const MarkovModel& model, const GridSpec& grid, double gamma_lo,
                  double gamma_hi, double tol, int max_iter) {
  if (!(gamma_lo >= 0.0 && gamma_hi > gamma_lo)) {
    throw std::invalid_argument("solve_nu: need 0 <= gamma_lo < gamma_hi");
  }
  NuResult out;
  auto r_at = [&](double g) {
    out.evaluations++;
    return perron(discretize(model, g, grid)).r;
  };

  out.r_at_infinity = r_at(kInf);

  double lo = gamma_lo, hi = gamma_hi;
  double r_lo = r_at(lo);
  while (r_lo <= 0.5 && lo > 1e-12) {  // r(0) = 1, so a small enough lo works
    lo *= 0.5;
    r_lo = r_at(lo);
  }
  if (r_lo <= 0.5) {
    out.status = NuStatus::bad_bracket;
    return out;
  }

  double r_hi = r_at(hi);
  if (r_hi >= 0.5) {
    if (out.r_at_infinity >= 0.5) {
      out.status = NuStatus::nu_infinite;
      return out;
    }
    // nu finite but the bracket stops short; monotone r allows extending.
    int doublings = 0;
    while (r_hi >= 0.5 && doublings < 40) {
      hi *= 2.0;
      r_hi = r_at(hi);
      ++doublings;
    }
    if (r_hi >= 0.5) {
      out.status = NuStatus::bad_bracket;
      return out;
    }
  }

  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (r_at(mid) > 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.status = NuStatus::found;
  out.nu = 0.5 * (lo + hi);
  return out;
}

CnuResult c_nu(const MarkovModel& model, const GridSpec& grid, double nu,
               const InitialLaw& mu, double lambda, double series_tol) {
  if (!(nu > 0.0) || nu == kInf) throw std::invalid_argument("c_nu: nu must be finite positive");

  CnuResult out;

  const TiltedOperator op_nu = discretize(model, nu, grid);
  const SpectralTriple t_nu = perron(op_nu);
  const MuOnGrid mu_nu = mu_on_grid(model, op_nu, mu, grid);
  const double a_nu = amplitude(model, op_nu, t_nu, mu_nu);
  const double rp = r_derivative(op_nu, t_nu);
  if (!(rp < 0.0)) {
    throw std::runtime_error("c_nu: r'(nu) must be negative (got " + std::to_string(rp) + ")");
  }
  out.formula_value = -a_nu / (2.0 * nu * rp);

  // Direct limit of (gamma-nu)/gamma * g_Y(gamma, lambda) at geometrically
  // shrinking offsets, then two Richardson levels (kills O(h) and O(h^2)).
  const double offsets[3] = {0.1 * nu, 0.05 * nu, 0.025 * nu};
  double f[3];
  bool ok = true;
  for (int i = 0; i < 3; ++i) {
    const double gamma = nu + offsets[i];
    const TiltedOperator op = discretize(model, gamma, grid);
    const MuOnGrid mug = mu_on_grid(model, op, mu, grid);
    std::unique_ptr<GridLaplaceSeries> series;
    if (mug.point_mode) {
      series = std::make_unique<GridLaplaceSeries>(op, model, mug.x);
    } else {
      series = std::make_unique<GridLaplaceSeries>(op, mug.weights);
    }
    const GeneratingValue g = generating_function(*series, gamma, lambda, series_tol);
    if (g.status != SeriesStatus::finite) {
      ok = false;
      break;
    }
    f[i] = (gamma - nu) / gamma * g.value;
  }

  if (ok) {
    const double a1 = 2.0 * f[1] - f[0];
    const double a1b = 2.0 * f[2] - f[1];
    out.direct_value = (4.0 * a1b - a1) / 3.0;
    out.direct_ok = true;
    out.rel_discrepancy =
        std::abs(out.direct_value - out.formula_value) / std::abs(out.formula_value);
    out.warning = out.rel_discrepancy > 0.05;
  } else {
    out.direct_ok = false;
    out.warning = true;
  }
  return out;
}

GZSupplier gz_iid(double marginal) {
  if (!(marginal >= 0.0 && marginal <= 1.0)) {
    throw std::invalid_argument("gz_iid: marginal in [0,1]");
  }
  GZSupplier s;
  s.marginal = marginal;
  s.tilted_radius = marginal;  // tilde U_gamma is rank-one with trace L
  s.g = [marginal](double x) -> std::optional<double> {
    if (x * marginal >= 1.0) return std::nullopt;
    return marginal / (1.0 - x * marginal);
  };
  return s;
}

GZSupplier gz_finite(const Eigen::MatrixXd& u, const Eigen::VectorXd& pi,
                     const Eigen::VectorXd& xi, double gamma) {
  const Eigen::Index n = u.rows();
  Eigen::VectorXd tilt(n);
  for (Eigen::Index i = 0; i < n; ++i) tilt[i] = tilt_factor(gamma, xi[i]);
  const Eigen::MatrixXd ud = u * tilt.asDiagonal();

  GZSupplier s;
  s.marginal = pi.dot(tilt);
  s.tilted_radius = ud.eigenvalues().cwiseAbs().maxCoeff();
  s.g = [ud, pi, tilt, n](double x) -> std::optional<double> {
    const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(n, n) - x * ud;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::VectorXd y = lu.solve(Eigen::VectorXd::Ones(n));
    // Neumann series validity: all powers non-negative contributions; the
    // resolvent solve is only the series sum inside the spectral radius.
    const double val = pi.dot(tilt.cwiseProduct(y));
    return val;
  };
  // Wrap with the radius check so callers cannot read the resolvent outside
  // the series domain.
  const double radius = s.tilted_radius;
  auto base = s.g;
  s.g = [base, radius](double x) -> std::optional<double> {
    if (std::abs(x) * radius >= 1.0 - 1e-12) return std::nullopt;
    return base(x);
  };
  return s;
}

KnudsenLambdaResult knudsen_lambda(double gamma, double alpha, const GZSupplier& gz,
                                   double tol, int max_iter) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("knudsen_lambda: alpha in (0,1)");
  }
  (void)gamma;  // the supplier is already built at the requested tilt

  KnudsenLambdaResult out;
  const double validity_floor = (1.0 - alpha) * gz.tilted_radius;

  auto map = [&](double lambda) -> std::optional<double> {
    const auto g = gz.g((1.0 - alpha) / lambda);
    if (!g) return std::nullopt;
    return alpha * *g;
  };

  double lambda = alpha * gz.marginal + (1.0 - alpha);
  double prev_step = kInf;
  int grew = 0;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    if (lambda <= validity_floor * (1.0 + 1e-12)) break;  // left the region: fall back
    const auto next = map(lambda);
    if (!next) break;
    const double step = std::abs(*next - lambda);
    if (step < tol * std::max(1.0, lambda)) {
      lambda = *next;
      if (lambda <= validity_floor * (1.0 + 1e-12)) {
        // converged onto the boundary: r(gamma) <= (1-alpha) rho(U_gamma)
        out.status = KnudsenLambdaStatus::subcritical;
        out.lambda = lambda;
        return out;
      }
      out.status = KnudsenLambdaStatus::converged;
      out.lambda = lambda;
      return out;
    }
    grew = step > prev_step ? grew + 1 : 0;
    if (grew >= 5) break;  // repulsive fixed point; switch to bisection
    prev_step = step;
    lambda = *next;
  }

  // Monotone fallback: F(lambda) = lambda - alpha g((1-alpha)/lambda) is
  // strictly increasing, F -> -inf at the validity floor and F(1) >= 0.
  out.used_bisection_fallback = true;
  double lo = validity_floor * (1.0 + 1e-10) + 1e-300;
  double hi = 1.0;
  auto f_at = [&](double l) -> std::optional<double> {
    const auto g = map(l);
    if (!g) return std::nullopt;
    return l - *g;
  };
  const auto f_hi = f_at(hi);
  if (!f_hi || *f_hi < 0.0) {
    out.status = KnudsenLambdaStatus::subcritical;
    out.lambda = lambda;
    return out;
  }
  // Find a lower end with F < 0: F tends to -inf at the validity floor, so
  // slide toward it until the sign shows up.
  bool lo_ok = false;
  double cand = 0.5 * (validity_floor + hi);
  for (int k = 0; k < 200; ++k) {
    const auto f_lo = f_at(cand);
    if (f_lo && *f_lo < 0.0) {
      lo = cand;
      lo_ok = true;
      break;
    }
    cand = 0.5 * (cand + validity_floor);
    if (cand <= validity_floor * (1.0 + 1e-12) + 1e-300) break;
  }
  if (!lo_ok) {
    out.status = KnudsenLambdaStatus::subcritical;
    out.lambda = lambda;
    return out;
  }
  for (int it = 0; it < 200 && hi - lo > tol * std::max(1.0, hi); ++it) {
    out.iterations++;
    const double mid = 0.5 * (lo + hi);
    const auto fm = f_at(mid);
    if (!fm || *fm < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.lambda = 0.5 * (lo + hi);
  out.status = out.lambda > validity_floor * (1.0 + 1e-12)
                   ? KnudsenLambdaStatus::converged
                   : KnudsenLambdaStatus::subcritical;
  return out;
}

NuCriterion knudsen_nu_criterion(double alpha, const GZSupplier& gz_at_infinity) {
  if (!(alpha > 0.5)) {
    throw std::invalid_argument("knudsen_nu_criterion: requires alpha > 1/2");
  }
  NuCriterion out;
  const auto g = gz_at_infinity.g(2.0 * (1.0 - alpha));
  if (!g) {
    out.threshold = kInf;
    out.nu_finite = false;
    return out;
  }
  out.threshold = 2.0 * alpha * *g;
  out.nu_finite = out.threshold < 1.0;
  return out;
}

std::vector<CounterexampleRow> counterexample_demo(double step_bound,
                                                   const std::vector<double>& gammas,
                                                   const std::vector<int>& ns,
                                                   const std::vector<double>& betas,
                                                   std::uint64_t trials, std::uint64_t seed) {
  if (!(step_bound > 0.0)) throw std::invalid_argument("counterexample: step bound > 0");
  if (trials < 1) throw std::invalid_argument("counterexample: trials >= 1");

  std::vector<CounterexampleRow> rows;
  for (double gamma : gammas) {
    for (int n : ns) {
      if (n < 0) throw std::invalid_argument("counterexample: n >= 0");
      for (double beta : betas) {
        if (!(beta > 0.0)) throw std::invalid_argument("counterexample: beta > 0");
        CounterexampleRow row;
        row.gamma = gamma;
        row.n = n;
        row.beta = beta;
        // xi(y) = e^{-|y|} <= beta outside the ball of radius R = ln(1/beta).
        const double r_ball = beta >= 1.0 ? 0.0 : std::log(1.0 / beta);
        row.far_point = r_ball + n * step_bound + 1.0;
        row.lower_bound = std::exp(-n * gamma * beta);

        // (P_gamma^n 1_{[xi<=beta]})(x) by simulation of the uniform walk.
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(rows.size())));
        std::uniform_real_distribution<double> step(-step_bound, step_bound);
        double acc = 0.0;
        for (std::uint64_t t = 0; t < trials; ++t) {
          double w = row.far_point;
          double s = 0.0;
          for (int k = 0; k < n; ++k) {
            w += step(rng);
            s += std::exp(-std::abs(w));
          }
          const bool inside = std::exp(-std::abs(w)) <= beta;
          acc += inside ? std::exp(-gamma * s) : 0.0;
        }
        row.mc_estimate = acc / static_cast<double>(trials);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace merg
