#include "merg/markov_model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "merg/rng_util.hpp"

namespace merg {

namespace {

void check_stochastic(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + ": transition matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) < 0.0) throw std::invalid_argument(std::string(what) + ": negative transition entry");
      row += m(i, j);
    }
    if (std::abs(row - 1.0) > 1e-12) {
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(i) +
                                  " sums to " + std::to_string(row) + ", expected 1 within 1e-12");
    }
  }
}

void check_probability_vector(const Eigen::VectorXd& v, const char* what) {
  if (v.size() == 0) throw std::invalid_argument(std::string(what) + ": empty probability vector");
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) throw std::invalid_argument(std::string(what) + ": negative probability entry");
    s += v[i];
  }
  if (std::abs(s - 1.0) > 1e-10) {
    throw std::invalid_argument(std::string(what) + ": probabilities sum to " + std::to_string(s));
  }
}

Eigen::VectorXd solve_stationary(const Eigen::MatrixXd& p) {
  // pi^T P = pi^T, sum(pi) = 1: replace one equation of (P^T - I) pi = 0 by
  // the normalization row.
  const Eigen::Index n = p.rows();
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(b);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi[i] < -1e-12) {
      throw std::invalid_argument("finite_state: stationary solve produced a negative entry; "
                                  "chain may be reducible");
    }
    pi[i] = std::max(pi[i], 0.0);
  }
  pi /= pi.sum();
  return pi;
}

int categorical_draw(const Eigen::VectorXd& probs, double u) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace

WeightFunction::WeightFunction(double r0_, double a) : r0(r0_), exponent(a) {
  if (r0 <= 0.0) throw std::invalid_argument("weight function: r0 must be > 0");
  if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("weight function: exponent in (0,1]");
}

double WeightFunction::operator()(double x) const {
  return std::pow(1.0 + std::abs(x), r0 * exponent);
}

std::string InitialLaw::describe() const {
  switch (kind_) {
    case Kind::point: return "delta(" + std::to_string(x_) + ")";
    case Kind::stationary: return "stationary";
    case Kind::law: return dist_->describe();
  }
  return "?";
}

MarkovModel MarkovModel::ar1(double alpha, NoiseSpec noise, double r0, Observable xi) {
  if (!(std::abs(alpha) < 1.0)) throw std::invalid_argument("ar1: need |alpha| < 1");
  if (!(r0 > 0.0)) throw std::invalid_argument("ar1: need r0 > 0");
  if (!noise.has_moment(r0)) {
    throw std::invalid_argument("ar1: noise lacks a finite moment of order r0 = " + std::to_string(r0));
  }
  return MarkovModel(Ar1Spec{alpha, std::move(noise), r0}, std::move(xi));
}

MarkovModel MarkovModel::knudsen(double alpha, ContinuousU u, DistributionSpec pi, Observable xi) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("knudsen: need alpha in (0,1] (alpha=1 is the degenerate i.i.d. mixture)");
  }
  if (const auto* r = std::get_if<ResampleU>(&u)) {
    if (!r->law.same_as(pi)) {
      throw std::invalid_argument("knudsen: resampling U law must coincide with pi "
                                  "(otherwise pi is not stationary for U)");
    }
  } else if (const auto* a = std::get_if<Ar1U>(&u)) {
    if (!(std::abs(a->alpha) < 1.0)) throw std::invalid_argument("knudsen: AR(1)-type U needs |alpha| < 1");
    if (a->noise.family() != NoiseSpec::Family::gaussian ||
        pi.family() != DistributionSpec::Family::gaussian) {
      throw std::invalid_argument("knudsen: AR(1)-type U requires Gaussian noise with Gaussian pi");
    }
    const double sd = a->noise.sigma() / std::sqrt(1.0 - a->alpha * a->alpha);
    if (std::abs(sd - pi.sigma()) > 1e-9 * std::max(1.0, sd)) {
      throw std::invalid_argument("knudsen: pi must be the stationary N(0, sigma^2/(1-alpha^2)) "
                                  "of the AR(1)-type U; expected sigma=" + std::to_string(sd));
    }
  }
  return MarkovModel(KnudsenSpec{alpha, std::move(u), std::move(pi)}, std::move(xi));
}

MarkovModel MarkovModel::knudsen_finite(double alpha, Eigen::MatrixXd u, Eigen::VectorXd pi,
                                        Observable xi) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("knudsen_finite: need alpha in (0,1]");
  check_stochastic(u, "knudsen_finite U");
  check_probability_vector(pi, "knudsen_finite pi");
  if (pi.size() != u.rows()) throw std::invalid_argument("knudsen_finite: pi/U size mismatch");
  const double resid = ((pi.transpose() * u).transpose() - pi).cwiseAbs().maxCoeff();
  if (resid > 1e-10) {
    throw std::invalid_argument("knudsen_finite: pi is not stationary for U (residual " +
                                std::to_string(resid) + ")");
  }
  if (xi.kind() == Observable::Kind::table &&
      static_cast<Eigen::Index>(xi.table_values().size()) != u.rows()) {
    throw std::invalid_argument("knudsen_finite: observable table size mismatch");
  }
  return MarkovModel(KnudsenFiniteSpec{alpha, std::move(u), std::move(pi)}, std::move(xi));
}

MarkovModel MarkovModel::finite_state(Eigen::MatrixXd transition, Observable xi,
                                      std::optional<Eigen::VectorXd> stationary) {
  check_stochastic(transition, "finite_state");
  Eigen::VectorXd pi = stationary ? *stationary : solve_stationary(transition);
  check_probability_vector(pi, "finite_state stationary");
  if (pi.size() != transition.rows()) {
    throw std::invalid_argument("finite_state: stationary vector size mismatch");
  }
  const double resid = ((pi.transpose() * transition).transpose() - pi).cwiseAbs().maxCoeff();
  if (resid > 1e-10) {
    throw std::invalid_argument("finite_state: stationary residual " + std::to_string(resid) +
                                " exceeds 1e-10");
  }
  if (xi.kind() == Observable::Kind::table &&
      static_cast<Eigen::Index>(xi.table_values().size()) != transition.rows()) {
    throw std::invalid_argument("finite_state: observable table size mismatch");
  }
  return MarkovModel(FiniteStateSpec{std::move(transition), std::move(pi)}, std::move(xi));
}

bool MarkovModel::is_finite() const {
  return as_finite_state() != nullptr || as_knudsen_finite() != nullptr;
}

int MarkovModel::num_states() const {
  if (const auto* f = as_finite_state()) return static_cast<int>(f->transition.rows());
  if (const auto* k = as_knudsen_finite()) return static_cast<int>(k->u.rows());
  throw std::logic_error("num_states: not a finite-state model");
}

Eigen::MatrixXd MarkovModel::transition_matrix() const {
  if (const auto* f = as_finite_state()) return f->transition;
  if (const auto* k = as_knudsen_finite()) {
    const Eigen::Index n = k->u.rows();
    return k->alpha * Eigen::VectorXd::Ones(n) * k->pi.transpose() + (1.0 - k->alpha) * k->u;
  }
  throw std::logic_error("transition_matrix: not a finite-state model");
}

Eigen::VectorXd MarkovModel::stationary_vector() const {
  if (const auto* f = as_finite_state()) return f->stationary;
  if (const auto* k = as_knudsen_finite()) return k->pi;
  throw std::logic_error("stationary_vector: not a finite-state model");
}

bool MarkovModel::is_iid() const {
  if (const auto* k = as_knudsen()) {
    return k->alpha == 1.0 || std::holds_alternative<ResampleU>(k->u);
  }
  if (const auto* k = as_knudsen_finite()) return k->alpha == 1.0;
  return false;
}

const DistributionSpec& MarkovModel::iid_marginal() const {
  const auto* k = as_knudsen();
  if (!k || !is_iid()) throw std::logic_error("iid_marginal: chain is not continuous i.i.d.");
  return k->pi;
}

double MarkovModel::weight_r0() const {
  if (const auto* a = as_ar1()) return a->r0;
  return 0.0;  // V == 1 on Knudsen/finite chains
}

std::string MarkovModel::describe() const {
  if (const auto* a = as_ar1()) {
    return "ar1(alpha=" + std::to_string(a->alpha) + ", noise=" + a->noise.describe() +
           ", r0=" + std::to_string(a->r0) + "), xi=" + xi_.describe();
  }
  if (const auto* k = as_knudsen()) {
    const char* ukind = std::holds_alternative<ResampleU>(k->u) ? "resample" : "ar1";
    return "knudsen(alpha=" + std::to_string(k->alpha) + ", U=" + ukind +
           ", pi=" + k->pi.describe() + "), xi=" + xi_.describe();
  }
  if (as_knudsen_finite()) {
    return "knudsen_finite(" + std::to_string(num_states()) + " states), xi=" + xi_.describe();
  }
  return "finite_state(" + std::to_string(num_states()) + " states), xi=" + xi_.describe();
}

double observable_at(const MarkovModel& model, double state) {
  return model.xi()(state);
}

std::vector<double> sample_path(const MarkovModel& model, const InitialLaw& initial,
                                int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample_path: n must be >= 0");
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> path;
  path.reserve(static_cast<std::size_t>(n) + 1);

  // initial state
  double x0 = 0.0;
  switch (initial.kind()) {
    case InitialLaw::Kind::point:
      x0 = initial.point_value();
      if (model.is_finite()) {
        const int idx = static_cast<int>(std::llround(x0));
        if (idx < 0 || idx >= model.num_states()) {
          throw std::invalid_argument("sample_path: point initial state outside finite chain");
        }
        x0 = idx;
      }
      break;
    case InitialLaw::Kind::stationary:
      if (const auto* a = model.as_ar1()) {
        if (a->noise.family() != NoiseSpec::Family::gaussian) {
          throw std::invalid_argument("sample_path: stationary initial law is only available in "
                                      "closed form for Gaussian AR(1)");
        }
        std::normal_distribution<double> d(0.0, ar1_gaussian_stationary_sd(*a));
        x0 = d(rng);
      } else if (const auto* k = model.as_knudsen()) {
        x0 = k->pi.sample(rng);
      } else {
        x0 = categorical_draw(model.stationary_vector(), unif(rng));
      }
      break;
    case InitialLaw::Kind::law:
      if (model.is_finite()) {
        throw std::invalid_argument("sample_path: density initial law unsupported on finite chains");
      }
      x0 = initial.dist().sample(rng);
      break;
  }
  path.push_back(x0);

  double x = x0;
  for (int k = 0; k < n; ++k) {
    if (const auto* a = model.as_ar1()) {
      x = a->alpha * x + a->noise.sample(rng);
    } else if (const auto* kn = model.as_knudsen()) {
      if (unif(rng) < kn->alpha) {
        x = kn->pi.sample(rng);
      } else if (const auto* r = std::get_if<ResampleU>(&kn->u)) {
        x = r->law.sample(rng);
      } else {
        const auto& au = std::get<Ar1U>(kn->u);
        x = au.alpha * x + au.noise.sample(rng);
      }
    } else if (const auto* kf = model.as_knudsen_finite()) {
      const int i = static_cast<int>(x);
      if (unif(rng) < kf->alpha) {
        x = categorical_draw(kf->pi, unif(rng));
      } else {
        x = categorical_draw(kf->u.row(i).transpose(), unif(rng));
      }
    } else {
      const auto* f = model.as_finite_state();
      const int i = static_cast<int>(x);
      x = categorical_draw(f->transition.row(i).transpose(), unif(rng));
    }
    path.push_back(x);
  }
  return path;
}

double transition_density(const MarkovModel& model, double x, double y) {
  if (const auto* a = model.as_ar1()) {
    return a->noise.density(y - a->alpha * x);
  }
  if (const auto* k = model.as_knudsen()) {
    double u_part;
    if (const auto* r = std::get_if<ResampleU>(&k->u)) {
      u_part = r->law.density(y);
    } else {
      const auto& au = std::get<Ar1U>(k->u);
      u_part = au.noise.density(y - au.alpha * x);
    }
    return k->alpha * k->pi.density(y) + (1.0 - k->alpha) * u_part;
  }
  const int i = static_cast<int>(std::llround(x));
  const int j = static_cast<int>(std::llround(y));
  const int n = model.num_states();
  if (i < 0 || i >= n || j < 0 || j >= n) {
    throw std::invalid_argument("transition_density: state index out of range");
  }
  return model.transition_matrix()(i, j);
}

std::pair<double, double> default_domain(const MarkovModel& model, double eps) {
  if (const auto* a = model.as_ar1()) {
    // Reach of the chain: |X_inf| <= sum alpha^k |theta_k|, sized from the
    // one-step quantile. Covers both the stationary mass and the kernel mass
    // seen from every grid node.
    const double q = a->noise.abs_quantile(eps);
    const double reach = q / (1.0 - std::abs(a->alpha));
    return {-reach, reach};
  }
  if (const auto* k = model.as_knudsen()) {
    auto [lo, hi] = k->pi.support(eps);
    if (const auto* au = std::get_if<Ar1U>(&k->u)) {
      const double reach = au->noise.abs_quantile(eps) / (1.0 - std::abs(au->alpha));
      lo = std::min(lo, -reach);
      hi = std::max(hi, reach);
    }
    return {lo, hi};
  }
  throw std::logic_error("default_domain: finite-state models have no continuous domain");
}

double ar1_gaussian_stationary_sd(const Ar1Spec& spec) {
  if (spec.noise.family() != NoiseSpec::Family::gaussian) {
    throw std::logic_error("ar1_gaussian_stationary_sd: noise is not Gaussian");
  }
  return spec.noise.sigma() / std::sqrt(1.0 - spec.alpha * spec.alpha);
}

}  // namespace merg
