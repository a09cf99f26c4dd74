#include "merg/laplace.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "merg/parallel.hpp"
#include "merg/quadrature.hpp"
#include "merg/rng_util.hpp"

namespace merg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kShardSize = 4096;

Eigen::VectorXd finite_mu_vector(const MarkovModel& model, const InitialLaw& initial) {
  const int n = model.num_states();
  switch (initial.kind()) {
    case InitialLaw::Kind::point: {
      const int i = static_cast<int>(std::llround(initial.point_value()));
      if (i < 0 || i >= n) throw std::invalid_argument("initial point outside finite chain");
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
      mu[i] = 1.0;
      return mu;
    }
    case InitialLaw::Kind::stationary:
      return model.stationary_vector();
    case InitialLaw::Kind::law:
      throw std::invalid_argument("density initial law unsupported on finite chains");
  }
  throw std::logic_error("corrupt initial law");
}

}  // namespace

const char* to_string(LaplaceSource s) {
  switch (s) {
    case LaplaceSource::monte_carlo: return "monte_carlo";
    case LaplaceSource::oracle_iid: return "oracle_iid";
    case LaplaceSource::oracle_riccati: return "oracle_riccati";
    case LaplaceSource::oracle_finite: return "oracle_finite";
    case LaplaceSource::grid_operator: return "grid_operator";
  }
  return "?";
}

const char* to_string(SeriesStatus s) {
  switch (s) {
    case SeriesStatus::finite: return "finite";
    case SeriesStatus::divergent: return "divergent";
    case SeriesStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

std::vector<LaplaceEstimate> laplace_mc_curve(const MarkovModel& model,
                                              const InitialLaw& initial, double gamma,
                                              int n_max, std::uint64_t trials,
                                              std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("laplace_mc: trials must be >= 1");
  if (n_max < 0) throw std::invalid_argument("laplace_mc: n_max must be >= 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("laplace_mc: gamma must be >= 0");

  const std::uint64_t shards = (trials + kShardSize - 1) / kShardSize;
  const int cols = n_max + 1;

  // Per-shard accumulators, merged in shard order afterwards.
  std::vector<Eigen::ArrayXd> shard_sum(shards), shard_sumsq(shards);

  parallel_for(0, shards, [&](std::size_t s) {
    const std::uint64_t lo = s * kShardSize;
    const std::uint64_t hi = std::min<std::uint64_t>(trials, lo + kShardSize);
    Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(cols);
    Eigen::ArrayXd sumsq = Eigen::ArrayXd::Zero(cols);
    const std::uint64_t shard_seed = derive_seed(seed, s);
    for (std::uint64_t trial = lo; trial < hi; ++trial) {
      const auto path =
          sample_path(model, initial, n_max, derive_seed(shard_seed, trial - lo));
      double s_n = 0.0;
      for (int k = 0; k <= n_max; ++k) {
        s_n += observable_at(model, path[static_cast<std::size_t>(k)]);
        const double v = std::exp(-gamma * s_n);
        sum[k] += v;
        sumsq[k] += v * v;
      }
    }
    shard_sum[s] = std::move(sum);
    shard_sumsq[s] = std::move(sumsq);
  });

  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(cols);
  Eigen::ArrayXd sumsq = Eigen::ArrayXd::Zero(cols);
  for (std::uint64_t s = 0; s < shards; ++s) {
    sum += shard_sum[s];
    sumsq += shard_sumsq[s];
  }

  std::vector<LaplaceEstimate> out(static_cast<std::size_t>(cols));
  const double nt = static_cast<double>(trials);
  for (int k = 0; k <= n_max; ++k) {
    LaplaceEstimate& e = out[static_cast<std::size_t>(k)];
    e.gamma = gamma;
    e.n = k;
    e.trials = trials;
    e.source = LaplaceSource::monte_carlo;
    e.value = sum[k] / nt;
    double var = 0.0;
    if (trials > 1) {
      var = std::max(0.0, (sumsq[k] - nt * e.value * e.value) / (nt - 1.0));
    }
    e.std_error = std::sqrt(var / nt);
  }
  return out;
}

LaplaceEstimate laplace_mc(const MarkovModel& model, const InitialLaw& initial, double gamma,
                           int n, std::uint64_t trials, std::uint64_t seed) {
  return laplace_mc_curve(model, initial, gamma, n, trials, seed).back();
}

LaplaceEstimate laplace_oracle_iid(double marginal, double gamma, int n) {
  if (!(marginal >= 0.0 && marginal <= 1.0)) {
    throw std::invalid_argument("laplace_oracle_iid: marginal Laplace value must be in [0,1]");
  }
  LaplaceEstimate e;
  e.gamma = gamma;
  e.n = n;
  e.value = std::pow(marginal, n + 1);
  e.source = LaplaceSource::oracle_iid;
  return e;
}

double marginal_laplace(const DistributionSpec& pi, const Observable& xi, double gamma,
                        int quad_points) {
  const auto [lo, hi] = pi.support(1e-14);
  const QuadratureRule rule = gauss_legendre(quad_points, lo, hi);
  double acc = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    const double x = rule.nodes[i];
    const double t = gamma == kInf ? (xi(x) == 0.0 ? 1.0 : 0.0) : std::exp(-gamma * xi(x));
    acc += rule.weights[i] * pi.density(x) * t;
  }
  return acc;
}

LaplaceEstimate laplace_oracle_riccati(double alpha, double sigma, double gamma, int n,
                                       const InitialLaw& initial) {
  if (!(std::abs(alpha) < 1.0) || !(sigma > 0.0)) {
    throw std::invalid_argument("riccati oracle: need |alpha| < 1 and sigma > 0");
  }
  if (!(gamma >= 0.0) || gamma == kInf) {
    throw std::invalid_argument("riccati oracle: gamma must be finite and >= 0");
  }
  if (n < 0) throw std::invalid_argument("riccati oracle: n must be >= 0");
  if (initial.kind() == InitialLaw::Kind::law) {
    throw std::invalid_argument("riccati oracle: initial law must be delta_x or stationary");
  }

  double b = gamma;
  double log_c = 0.0;
  for (int m = 0; m < n; ++m) {
    const double d = 1.0 + 2.0 * sigma * sigma * b;
    log_c -= 0.5 * std::log(d);
    b = gamma + alpha * alpha * b / d;
  }

  LaplaceEstimate e;
  e.gamma = gamma;
  e.n = n;
  e.source = LaplaceSource::oracle_riccati;
  if (initial.kind() == InitialLaw::Kind::point) {
    const double x = initial.point_value();
    e.value = std::exp(log_c - b * x * x);
  } else {
    const double s2 = sigma * sigma / (1.0 - alpha * alpha);
    e.value = std::exp(log_c - 0.5 * std::log1p(2.0 * b * s2));
  }
  return e;
}

LaplaceEstimate laplace_oracle_finite(const MarkovModel& model, double gamma, int n,
                                      const InitialLaw& initial) {
  if (!model.is_finite()) throw std::invalid_argument("finite oracle: finite-state model required");
  if (n < 0) throw std::invalid_argument("finite oracle: n must be >= 0");

  const int m = model.num_states();
  const Eigen::MatrixXd p = model.transition_matrix();
  const Eigen::VectorXd xi =
      evaluate_observable_on_grid(model.xi(), Eigen::VectorXd::LinSpaced(m, 0.0, m - 1.0));
  Eigen::VectorXd tilt(m);
  for (int i = 0; i < m; ++i) tilt[i] = tilt_factor(gamma, xi[i]);
  const Eigen::VectorXd mu = finite_mu_vector(model, initial);

  // mu^T D (P D)^n 1, never forming the dense matrix power; log rescaling
  // keeps long horizons representable.
  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
  double log_scale = 0.0;
  for (int k = 0; k < n; ++k) {
    w = p * tilt.cwiseProduct(w);
    const double norm = w.cwiseAbs().maxCoeff();
    if (norm <= 0.0) {
      log_scale = -kInf;
      break;
    }
    w /= norm;
    log_scale += std::log(norm);
  }

  LaplaceEstimate e;
  e.gamma = gamma;
  e.n = n;
  e.source = LaplaceSource::oracle_finite;
  const double dot = mu.dot(tilt.cwiseProduct(w));
  e.value = log_scale == -kInf ? 0.0 : dot * std::exp(log_scale);
  return e;
}

// ---- suppliers --------------------------------------------------------------

namespace {

class IidSeries final : public LaplaceSeries {
 public:
  explicit IidSeries(double marginal) : log_l_(std::log(marginal)) {
    if (!(marginal >= 0.0 && marginal <= 1.0)) {
      throw std::invalid_argument("iid series: marginal in [0,1]");
    }
  }
  double log_value(int n) override { return (n + 1) * log_l_; }
  LaplaceSource source() const override { return LaplaceSource::oracle_iid; }

 private:
  double log_l_;
};

class RiccatiSeries final : public LaplaceSeries {
 public:
  RiccatiSeries(double alpha, double sigma, double gamma, const InitialLaw& initial)
      : alpha_(alpha), sigma_(sigma), gamma_(gamma), initial_(initial) {
    b_.push_back(gamma);
    log_c_.push_back(0.0);
  }

  double log_value(int n) override {
    while (static_cast<int>(b_.size()) <= n) {
      const double b = b_.back();
      const double d = 1.0 + 2.0 * sigma_ * sigma_ * b;
      log_c_.push_back(log_c_.back() - 0.5 * std::log(d));
      b_.push_back(gamma_ + alpha_ * alpha_ * b / d);
    }
    const double b = b_[static_cast<std::size_t>(n)];
    const double lc = log_c_[static_cast<std::size_t>(n)];
    if (initial_.kind() == InitialLaw::Kind::point) {
      const double x = initial_.point_value();
      return lc - b * x * x;
    }
    const double s2 = sigma_ * sigma_ / (1.0 - alpha_ * alpha_);
    return lc - 0.5 * std::log1p(2.0 * b * s2);
  }
  LaplaceSource source() const override { return LaplaceSource::oracle_riccati; }

 private:
  double alpha_, sigma_, gamma_;
  InitialLaw initial_;
  std::vector<double> b_, log_c_;
};

class FiniteSeries final : public LaplaceSeries {
 public:
  FiniteSeries(const MarkovModel& model, double gamma, const InitialLaw& initial)
      : p_(model.transition_matrix()) {
    const int m = model.num_states();
    const Eigen::VectorXd xi =
        evaluate_observable_on_grid(model.xi(), Eigen::VectorXd::LinSpaced(m, 0.0, m - 1.0));
    tilt_.resize(m);
    for (int i = 0; i < m; ++i) tilt_[i] = tilt_factor(gamma, xi[i]);
    mu_ = finite_mu_vector(model, initial);
    w_ = Eigen::VectorXd::Ones(m);
  }

  double log_value(int n) override {
    while (static_cast<int>(cache_.size()) <= n) {
      const double dot = mu_.dot(tilt_.cwiseProduct(w_));
      cache_.push_back(dot > 0.0 ? log_scale_ + std::log(dot) : -kInf);
      w_ = p_ * tilt_.cwiseProduct(w_);
      const double norm = w_.cwiseAbs().maxCoeff();
      if (norm > 0.0) {
        w_ /= norm;
        log_scale_ += std::log(norm);
      } else {
        log_scale_ = -kInf;
      }
    }
    return cache_[static_cast<std::size_t>(n)];
  }
  LaplaceSource source() const override { return LaplaceSource::oracle_finite; }

 private:
  Eigen::MatrixXd p_;
  Eigen::VectorXd tilt_, mu_, w_;
  double log_scale_ = 0.0;
  std::vector<double> cache_;
};

class McSeries final : public LaplaceSeries {
 public:
  explicit McSeries(std::vector<LaplaceEstimate> curve) : curve_(std::move(curve)) {}
  double log_value(int n) override {
    return std::log(at(n).value);
  }
  double std_error(int n) override { return at(n).std_error; }
  LaplaceSource source() const override { return LaplaceSource::monte_carlo; }

 private:
  const LaplaceEstimate& at(int n) const {
    if (n < 0 || n >= static_cast<int>(curve_.size())) {
      throw std::out_of_range("mc series: horizon beyond the simulated curve");
    }
    return curve_[static_cast<std::size_t>(n)];
  }
  std::vector<LaplaceEstimate> curve_;
};

}  // namespace

std::unique_ptr<LaplaceSeries> make_iid_series(double marginal) {
  return std::make_unique<IidSeries>(marginal);
}
std::unique_ptr<LaplaceSeries> make_riccati_series(double alpha, double sigma, double gamma,
                                                   const InitialLaw& initial) {
  return std::make_unique<RiccatiSeries>(alpha, sigma, gamma, initial);
}
std::unique_ptr<LaplaceSeries> make_finite_series(const MarkovModel& model, double gamma,
                                                  const InitialLaw& initial) {
  return std::make_unique<FiniteSeries>(model, gamma, initial);
}
std::unique_ptr<LaplaceSeries> make_mc_series(std::vector<LaplaceEstimate> curve) {
  return std::make_unique<McSeries>(std::move(curve));
}

GridLaplaceSeries::GridLaplaceSeries(const TiltedOperator& op, Eigen::VectorXd mu_weights)
    : op_(op) {
  if (mu_weights.size() != op.nodes.size()) {
    throw std::invalid_argument("grid series: mu weight size mismatch");
  }
  Eigen::VectorXd tilt(op.size());
  for (int i = 0; i < op.size(); ++i) tilt[i] = tilt_factor(op.gamma, op.xi[i]);
  mu_tilted_ = mu_weights.cwiseProduct(tilt);
  iterate_ = Eigen::VectorXd::Ones(op.size());
}

GridLaplaceSeries::GridLaplaceSeries(const TiltedOperator& op, const MarkovModel& model,
                                     double x)
    : op_(op), point_mode_(true) {
  point_tilt_ = tilt_factor(op.gamma, model.xi()(x));
  point_row_.resize(op.size());
  for (int j = 0; j < op.size(); ++j) {
    point_row_[j] = op.weights[j] * tilt_factor(op.gamma, op.xi[j]) *
                    transition_density(model, x, op.nodes[j]);
  }
  iterate_ = Eigen::VectorXd::Ones(op.size());
}

void GridLaplaceSeries::advance_to(int n) {
  // Weights mode evaluates mu_tilted . (K^m 1) with iterate_ = K^m 1.
  // Point mode evaluates tilt(x) * row_x . (K^(m-1) 1): the Nystrom
  // extension of K^m 1 at x, so the iterate lags one application behind.
  while (static_cast<int>(cache_.size()) <= n) {
    const int m = static_cast<int>(cache_.size());
    double v;
    if (point_mode_) {
      v = m == 0 ? point_tilt_ : point_tilt_ * point_row_.dot(iterate_);
    } else {
      v = mu_tilted_.dot(iterate_);
    }
    cache_.push_back(v > 0.0 ? log_scale_ + std::log(v) : -kInf);

    if (point_mode_ && m == 0) continue;  // cache[1] also reads K^0 1
    iterate_ = op_.matrix * iterate_;
    const double norm = iterate_.cwiseAbs().maxCoeff();
    if (norm > 0.0) {
      iterate_ /= norm;
      log_scale_ += std::log(norm);
    } else {
      log_scale_ = -kInf;
    }
  }
}

double GridLaplaceSeries::log_value(int n) {
  if (n < 0) throw std::invalid_argument("grid series: n >= 0");
  advance_to(n);
  return cache_[static_cast<std::size_t>(n)];
}

GeneratingValue generating_function(LaplaceSeries& series, double gamma, double lambda,
                                    double tol, int n_max) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("generating_function: lambda >= 0");
  GeneratingValue out;
  out.gamma = gamma;
  out.lambda = lambda;

  if (lambda == 0.0) {
    out.status = SeriesStatus::finite;
    out.value = std::exp(series.log_value(0));
    out.truncation_n = 0;
    return out;
  }

  const double log_lambda = std::log(lambda);
  constexpr int kWindow = 20;
  std::deque<double> ratios;

  double partial = 0.0;
  double prev_log_t = 0.0;
  double t = 0.0;
  for (int n = 0; n < n_max; ++n) {
    const double log_t = n * log_lambda + series.log_value(n);
    t = std::exp(log_t);
    if (std::isinf(t)) {  // terms exploding
      out.status = SeriesStatus::divergent;
      out.truncation_n = n;
      return out;
    }
    partial += t;

    if (n >= 1) {
      double q;
      if (log_t == -kInf && prev_log_t == -kInf) {
        q = 0.0;  // series died; treat as terminated
      } else {
        q = std::exp(log_t - prev_log_t);
      }
      ratios.push_back(q);
      if (static_cast<int>(ratios.size()) > kWindow) ratios.pop_front();
    }
    prev_log_t = log_t;
    if (static_cast<int>(ratios.size()) < kWindow) continue;

    double qmax = 0.0, qmin = kInf, qsum = 0.0;
    for (double q : ratios) {
      qmax = std::max(qmax, q);
      qmin = std::min(qmin, q);
      qsum += q;
    }
    const double qbar = qsum / kWindow;
    const double spread = qmax - qmin;
    out.limit_ratio = qbar;

    // Terms pinned at or above 1 over the whole window: the partial sums
    // stopped contracting, the series diverges.
    if (qmin >= 1.0) {
      out.status = SeriesStatus::divergent;
      out.truncation_n = n;
      return out;
    }

    if (qmax < 1.0) {
      const double tail = t * qmax / (1.0 - qmax);
      if (tail <= tol * std::max(partial, 1.0)) {
        const double gap = 1.0 - qbar;
        out.status = SeriesStatus::finite;
        out.value = partial + t * qbar / gap;
        out.truncation_n = n;
        out.truncation_bound = t * spread / (gap * gap);
        return out;
      }
    }

    const bool stable = spread <= 1e-9 * std::max(qmax, 1e-300);
    if (stable) {
      if (qbar >= 1.0) {
        if (qbar - 1.0 > 2.0 * spread) {
          out.status = SeriesStatus::divergent;
          out.truncation_n = n;
          return out;
        }
        if (n >= 20 * kWindow) {  // stabilized astride 1: cannot resolve
          out.status = SeriesStatus::inconclusive;
          out.truncation_n = n;
          return out;
        }
      } else {
        const double gap = 1.0 - qbar;
        if (gap > 100.0 * spread) {
          const double value = partial + t * qbar / gap;
          const double bound = t * spread / (gap * gap);
          if (bound <= tol * std::max(value, 1.0)) {
            out.status = SeriesStatus::finite;
            out.value = value;
            out.truncation_n = n;
            out.truncation_bound = bound;
            return out;
          }
        } else if (n >= 20 * kWindow) {  // ratio jitter straddles 1
          out.status = SeriesStatus::inconclusive;
          out.truncation_n = n;
          return out;
        }
      }
    }
  }

  out.status = SeriesStatus::inconclusive;
  out.truncation_n = n_max;
  return out;
}

}  // namespace merg
