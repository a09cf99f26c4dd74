#include "merg/spectral.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "merg/rng_util.hpp"

namespace merg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Growth rate of the deflated iteration: estimates the second eigenvalue
// modulus. Re-deflates every step so roundoff cannot reintroduce the
// dominant direction; tracks log-growth to survive underflow.
double estimate_sub_modulus(const TiltedOperator& op, const Eigen::VectorXd& phi,
                            const Eigen::VectorXd& pi_weights, double r) {
  const int n = op.size();
  if (r <= 0.0) return 0.0;

  std::mt19937_64 rng(splitmix64(0x5eb0d999ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = normal(rng);

  auto deflate = [&](Eigen::VectorXd& v) { v -= pi_weights.dot(v) * phi; };
  deflate(g);
  double norm = weighted_sup_norm(g, op.v_weights);
  if (norm <= 0.0) return 0.0;
  g /= norm;

  const int warmup = 20;
  const int steps = 80;
  double log_growth = 0.0;
  int counted = 0;
  for (int k = 0; k < warmup + steps; ++k) {
    g = op.matrix * g;
    deflate(g);
    norm = weighted_sup_norm(g, op.v_weights);
    if (norm <= 1e-300 || !std::isfinite(norm)) return 0.0;
    g /= norm;
    if (k >= warmup) {
      log_growth += std::log(norm);
      ++counted;
    }
  }
  const double sub = std::exp(log_growth / counted);
  return std::min(sub, r);  // deflation noise cannot exceed the dominant rate
}

}  // namespace

SpectralTriple perron(const TiltedOperator& op, double tol, int max_iter) {
  const int n = op.size();
  SpectralTriple t;

  const double max_entry = op.matrix.cwiseAbs().maxCoeff();
  if (max_entry == 0.0) {
    // P_inf with xi > 0 on the whole grid, or a degenerate kernel.
    t.r = 0.0;
    t.phi = op.v_weights;  // any positive representative
    t.phi /= t.phi.sum();
    t.pi_weights = Eigen::VectorXd::Constant(n, 1.0 / n);
    t.converged = true;
    return t;
  }

  Eigen::VectorXd v = op.v_weights.cwiseInverse();  // V^{-a} 1 > 0
  v /= weighted_sup_norm(v, op.v_weights);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / n);

  double r_prev = 0.0;
  double r = 0.0;
  double osc = kInf;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    Eigen::VectorXd kv = op.matrix * v;
    Eigen::VectorXd ku = op.matrix.transpose() * u;

    const double uv = u.dot(v);
    r = uv != 0.0 ? u.dot(kv) / uv : weighted_sup_norm(kv, op.v_weights);
    if (!(r > 0.0) || !std::isfinite(r)) {
      // Tilt wiped out the mass seen by the iterates.
      t.r = 0.0;
      t.phi = v;
      t.pi_weights = Eigen::VectorXd::Constant(n, 1.0 / n);
      t.converged = true;
      t.iterations = iter;
      return t;
    }

    const double right_res = weighted_sup_norm(kv - r * v, op.v_weights) /
                             weighted_sup_norm(v, op.v_weights);
    const double left_res = (ku - r * u).cwiseAbs().sum() / u.cwiseAbs().sum();
    osc = std::abs(r - r_prev) / std::max(r, 1e-300);
    r_prev = r;

    const double vn = weighted_sup_norm(kv, op.v_weights);
    const double un = ku.cwiseAbs().sum();
    if (vn <= 0.0 || un <= 0.0) {
      // Nilpotent part only: the iterate died, so the spectral radius is 0.
      t.r = 0.0;
      t.phi = v;
      t.pi_weights = Eigen::VectorXd::Constant(n, 1.0 / n);
      t.converged = true;
      t.iterations = iter;
      return t;
    }
    v = kv / vn;
    u = ku / un;

    if (right_res <= tol * std::max(r, 1e-300) && left_res <= tol * std::max(r, 1e-300) &&
        osc <= tol) {
      t.converged = true;
      ++iter;
      break;
    }
  }

  if (!t.converged) {
    throw PerronNonConvergence(
        "perron: power iteration did not converge in " + std::to_string(max_iter) +
            " iterations (last relative ratio oscillation " + std::to_string(osc) +
            "); a tied or complex dominant eigenvalue is likely",
        osc);
  }

  // Normalizations: pi_gamma has total mass 1, then pi_gamma(phi) = 1.
  u = u.cwiseMax(0.0);
  const double usum = u.sum();
  if (usum <= 0.0) throw PerronPositivityError("perron: left eigenvector has no mass");
  u /= usum;
  const double scale = u.dot(v);
  if (scale <= 0.0) throw PerronPositivityError("perron: pi_gamma(phi) <= 0");
  v /= scale;

  // Perron positivity assertions. For finite tilts with a strictly positive
  // kernel phi must be positive everywhere; the indicator tilt at gamma=inf
  // legitimately zeroes unreachable states.
  const double phi_min = v.minCoeff();
  if (phi_min < -1e-12 * v.cwiseAbs().maxCoeff()) {
    throw PerronPositivityError("perron: right eigenvector has a negative entry");
  }
  if (op.gamma != kInf && phi_min <= 0.0) {
    throw PerronPositivityError(
        "perron: right eigenvector vanishes at a grid node (reducible kernel?)");
  }

  t.r = r;
  t.phi = v;
  t.pi_weights = u;
  t.iterations = iter;
  t.residual = weighted_sup_norm(op.matrix * v - r * v, op.v_weights) /
               weighted_sup_norm(v, op.v_weights);
  t.left_residual = (op.matrix.transpose() * u - r * u).cwiseAbs().sum();
  t.sub_modulus = estimate_sub_modulus(op, v, u, r);
  return t;
}

Eigen::VectorXd projector_apply(const SpectralTriple& triple, const Eigen::VectorXd& f) {
  return triple.pi(f) * triple.phi;
}

double r_derivative(const TiltedOperator& op, const SpectralTriple& triple) {
  if (!triple.converged || triple.r <= 0.0) {
    throw std::invalid_argument("r_derivative: needs a converged triple with r > 0");
  }
  const double num = triple.pi(op.xi.cwiseProduct(triple.phi));
  const double den = triple.pi(triple.phi);
  return -triple.r * num / den;
}

DriftReport drift_check(const MarkovModel& model, double gamma, double beta, double delta,
                        const GridSpec& grid) {
  const auto* ar = model.as_ar1();
  if (!ar) throw std::invalid_argument("drift_check: AR(1) model required");
  if (!(beta > 0.0)) throw std::invalid_argument("drift_check: beta must be > 0");
  const double floor = std::pow(std::abs(ar->alpha), ar->r0);
  if (!(delta > floor)) {
    throw std::invalid_argument("drift_check: need delta > |alpha|^r0 = " + std::to_string(floor));
  }

  const TiltedOperator base = discretize(model, 0.0, grid);
  const WeightFunction v_fn(ar->r0, 1.0);
  const int n = base.size();
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = v_fn(base.nodes[i]);

  // base.matrix holds w_j p(x_j - alpha x_i); apply tilt splits column-wise.
  Eigen::VectorXd tilt(n), tilt_above(n);
  for (int j = 0; j < n; ++j) {
    tilt[j] = tilt_factor(gamma, base.xi[j]);
    tilt_above[j] = base.xi[j] > beta ? tilt[j] : 0.0;
  }

  const Eigen::VectorXd pv = base.matrix * v;                              // P V
  const Eigen::VectorXd pgv = base.matrix * tilt.cwiseProduct(v);          // P_gamma V
  const Eigen::VectorXd pgv_above = base.matrix * tilt_above.cwiseProduct(v);

  const double l0 = std::max(0.0, (pv - delta * v).maxCoeff());  // gamma = 0 drift constant

  DriftReport rep;
  const double damp = gamma == kInf ? 0.0 : std::exp(-gamma * beta);
  rep.L_constant = std::max(0.0, (pgv - damp * delta * v).maxCoeff());
  rep.holds = std::isfinite(rep.L_constant);

  // Split estimate: P_gamma(1_{xi>beta} V) <= e^{-gamma beta} P V <=
  // e^{-gamma beta} (delta V + L0), so the measured ratio scaled by delta
  // stays below e^{-gamma beta} delta.
  double ratio = 0.0;
  for (int i = 0; i < n; ++i) {
    ratio = std::max(ratio, pgv_above[i] / (delta * v[i] + l0));
  }
  rep.leading_coeff = delta * ratio;
  return rep;
}

ContinuityBound continuity_modulus(const MarkovModel& model, double gamma, double gamma_prime,
                                   double a, double b, const GridSpec& grid) {
  if (!(a >= 0.0 && b > 0.0 && a + b <= 1.0)) {
    throw std::invalid_argument("continuity_modulus: need 0 <= a < a+b <= 1");
  }
  const double r0 = model.weight_r0() > 0.0 ? model.weight_r0() : 1.0;
  const auto c = model.xi().sup_ratio_bound(r0);
  if (!c) {
    throw std::invalid_argument(
        "continuity_modulus: observable lacks a sup xi/V bound; supply one explicitly");
  }

  // Same grid for all three operators; the weight exponent on the operator
  // object is irrelevant here, the norms below carry the exponents.
  const TiltedOperator ka = discretize(model, gamma, grid);
  const TiltedOperator kb = discretize(model, gamma_prime, grid);
  const TiltedOperator k0 = discretize(model, 0.0, grid);

  const WeightFunction v_in_fn(r0, std::max(a, 1e-12));
  const WeightFunction v_out_fn(r0, a + b);
  const int n = ka.size();
  Eigen::VectorXd v_in(n), v_out(n);
  for (int i = 0; i < n; ++i) {
    v_in[i] = a == 0.0 ? 1.0 : v_in_fn(ka.nodes[i]);
    v_out[i] = v_out_fn(ka.nodes[i]);
  }

  ContinuityBound out;
  out.measured_norm = weighted_operator_norm(ka.matrix - kb.matrix, v_in, v_out);
  out.lemma_bound = std::pow(*c * std::abs(gamma - gamma_prime), b) *
                    weighted_operator_norm(k0.matrix, v_out, v_out);
  return out;
}

}  // namespace merg
