#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "merg/spectral.hpp"

using namespace merg;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MarkovModel resampling_exp1(double alpha = 0.7) {
  const auto pi = DistributionSpec::exponential(1.0);
  return MarkovModel::knudsen(alpha, ResampleU{pi}, pi, Observable::power(1.0));
}

MarkovModel ar1_gauss_quadratic(double alpha = 0.5, double sigma = 1.0) {
  return MarkovModel::ar1(alpha, NoiseSpec::gaussian(sigma), 2.0, Observable::quadratic());
}

// Gaussian-ansatz closed form for the AR(1)/xi=x^2 radius: phi = e^{-b x^2}
// with b the nonnegative root of 2 s^2 b^2 + b (1 + 2 s^2 g - a^2) - g a^2.
double ar1_closed_form_r(double alpha, double sigma, double gamma) {
  const double s2 = sigma * sigma;
  const double qa = 2.0 * s2;
  const double qb = 1.0 + 2.0 * s2 * gamma - alpha * alpha;
  const double qc = -gamma * alpha * alpha;
  const double b = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
  return 1.0 / std::sqrt(1.0 + 2.0 * s2 * (gamma + b));
}

MarkovModel random_finite(int states, std::uint64_t seed, double* xi_max = nullptr) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd p(states, states);
  std::vector<double> xi(static_cast<std::size_t>(states));
  for (int i = 0; i < states; ++i) {
    double row = 0.0;
    for (int j = 0; j < states; ++j) {
      p(i, j) = u(rng);
      row += p(i, j);
    }
    p.row(i) /= row;
    xi[static_cast<std::size_t>(i)] = u(rng);
    if (xi_max) *xi_max = std::max(*xi_max, xi[static_cast<std::size_t>(i)]);
  }
  return MarkovModel::finite_state(p, Observable::table(xi));
}

}  // namespace

TEST_CASE("finite chain at gamma=0 reproduces the transition matrix") {
  Eigen::MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.3, 0.7;
  const auto model = MarkovModel::finite_state(p, Observable::table({0.4, 1.0}));
  const auto op = discretize(model, 0.0, GridSpec{});
  CHECK((op.matrix - p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("indicator tilt: xi > 0 everywhere zeroes the operator and r") {
  const auto model = resampling_exp1();
  const auto op = discretize(model, kInf, GridSpec{});
  CHECK(op.matrix.cwiseAbs().maxCoeff() == 0.0);
  const auto t = perron(op);
  CHECK(t.r == 0.0);
  CHECK(t.converged);
}

TEST_CASE("AR(1) untilted row sums are 1 to quadrature accuracy") {
  const auto model = ar1_gauss_quadratic();
  const auto op = discretize(model, 0.0, GridSpec::with_n(400));
  for (int i = 0; i < op.size(); ++i) {
    CHECK(op.matrix.row(i).sum() == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK(op.mass_defect < 1e-8);
}

TEST_CASE("tilt monotonicity is exact entrywise") {
  const auto model = ar1_gauss_quadratic();
  const auto a = discretize(model, 0.5, GridSpec::with_n(80));
  const auto b = discretize(model, 1.5, GridSpec::with_n(80));
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < a.size(); ++j) {
      CHECK(b.matrix(i, j) <= a.matrix(i, j));
    }
  }
}

TEST_CASE("grid too small is reported with the required half-width") {
  const auto model = ar1_gauss_quadratic();
  GridSpec tiny;
  tiny.n = 100;
  tiny.xmax = 2.0;
  CHECK_THROWS_WITH_AS(discretize(model, 0.0, tiny), doctest::Contains("half-width"),
                       std::runtime_error);
}

TEST_CASE("r(0) = 1 for every shipped model") {
  CHECK(perron(discretize(resampling_exp1(), 0.0, GridSpec{})).r ==
        doctest::Approx(1.0).epsilon(1e-8));
  CHECK(perron(discretize(ar1_gauss_quadratic(), 0.0, GridSpec{})).r ==
        doctest::Approx(1.0).epsilon(1e-8));
  Eigen::MatrixXd p(3, 3);
  p << 0.5, 0.25, 0.25, 0.2, 0.6, 0.2, 0.25, 0.25, 0.5;
  const auto fs = MarkovModel::finite_state(p, Observable::table({0.1, 0.5, 1.0}));
  CHECK(perron(discretize(fs, 0.0, GridSpec{})).r == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("rank-one resampling operator: trace eigenvalue and flat eigenfunction") {
  const auto model = resampling_exp1();
  for (double gamma : {0.25, 1.0, 3.0}) {
    const auto op = discretize(model, gamma, GridSpec{});
    const auto t = perron(op);
    // trace of the rank-one kernel = sum_j w_j e^{-gamma x_j} pi(x_j)
    double trace = 0.0;
    for (int j = 0; j < op.size(); ++j) {
      trace += op.weights[j] * std::exp(-gamma * op.xi[j]) *
               std::exp(-op.nodes[j]);  // Exp(1) density on [0, inf)
    }
    CHECK(t.r == doctest::Approx(trace).epsilon(1e-10));
    CHECK(t.r == doctest::Approx(1.0 / (1.0 + gamma)).epsilon(1e-6));
    const double lo = t.phi.minCoeff(), hi = t.phi.maxCoeff();
    CHECK(hi - lo <= 1e-9 * hi);  // constant eigenfunction
    CHECK(t.sub_modulus <= 1e-9);
  }
}

TEST_CASE("AR(1) Gaussian-ansatz closed form") {
  const auto model = ar1_gauss_quadratic();

  SUBCASE("ansatz verified by direct quadrature of (P_gamma phi)/phi") {
    const double gamma = 0.8;
    const double r = ar1_closed_form_r(0.5, 1.0, gamma);
    const double b = 1.0 / (2.0 * r * r) - 0.5 - gamma;  // back out b from r
    const auto rule = gauss_legendre(1200, -12.0, 12.0);
    for (double x : {0.0, 0.7, -1.9}) {
      double acc = 0.0;
      for (int i = 0; i < rule.size(); ++i) {
        const double y = rule.nodes[i];
        acc += rule.weights[i] * std::exp(-gamma * y * y) * std::exp(-b * y * y) *
               transition_density(model, x, y);
      }
      CHECK(acc / std::exp(-b * x * x) == doctest::Approx(r).epsilon(1e-8));
    }
  }

  SUBCASE("Nystrom radius matches the closed form at N=400") {
    for (double gamma : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      const auto t = perron(discretize(model, gamma, GridSpec::with_n(400)));
      CHECK(t.r == doctest::Approx(ar1_closed_form_r(0.5, 1.0, gamma)).epsilon(1e-4));
    }
  }
}

TEST_CASE("projector behaviour") {
  const auto model = ar1_gauss_quadratic();
  const auto op = discretize(model, 0.7, GridSpec::with_n(200));
  const auto t = perron(op);

  SUBCASE("fixes its range") {
    const auto once = projector_apply(t, t.phi);
    CHECK((once - t.phi).cwiseAbs().maxCoeff() < 1e-10 * t.phi.cwiseAbs().maxCoeff());
  }
  SUBCASE("kills the kernel of pi_gamma") {
    Eigen::VectorXd f = Eigen::VectorXd::Ones(op.size());
    f -= t.pi(f) * t.phi;  // now pi(f) = 0
    CHECK(std::abs(t.pi(f)) < 1e-12);
    CHECK(projector_apply(t, f).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("idempotent on random vectors") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::VectorXd f(op.size());
      for (int i = 0; i < op.size(); ++i) f[i] = normal(rng);
      const auto once = projector_apply(t, f);
      const auto twice = projector_apply(t, once);
      CHECK((twice - once).cwiseAbs().maxCoeff() <=
            1e-10 * std::max(1.0, once.cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("commutes with K through the eigenvalue") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    Eigen::VectorXd f(op.size());
    for (int i = 0; i < op.size(); ++i) f[i] = normal(rng);
    const Eigen::VectorXd k_pi = op.matrix * projector_apply(t, f);
    const Eigen::VectorXd pi_k = projector_apply(t, op.matrix * f);
    const Eigen::VectorXd r_pi = t.r * projector_apply(t, f);
    const double scale = std::max(1.0, r_pi.cwiseAbs().maxCoeff());
    CHECK((k_pi - r_pi).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    CHECK((pi_k - r_pi).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  }
}

TEST_CASE("r_derivative") {
  SUBCASE("constant observable: r' = -c e^{-gamma c}") {
    Eigen::MatrixXd p(3, 3);
    p << 0.5, 0.25, 0.25, 0.2, 0.6, 0.2, 0.25, 0.25, 0.5;
    const double c = 0.9;
    const auto model = MarkovModel::finite_state(p, Observable::table({c, c, c}));
    for (double gamma : {0.0, 0.5, 2.0}) {
      const auto op = discretize(model, gamma, GridSpec{});
      const auto t = perron(op, 1e-12);
      CHECK(t.r == doctest::Approx(std::exp(-gamma * c)).epsilon(1e-10));
      CHECK(r_derivative(op, t) ==
            doctest::Approx(-c * std::exp(-gamma * c)).epsilon(1e-8));
    }
  }
  SUBCASE("resampling Exp(1): r' = -1/(1+gamma)^2") {
    const auto model = resampling_exp1();
    for (double gamma : {0.5, 1.0, 2.0}) {
      const auto op = discretize(model, gamma, GridSpec{});
      const auto t = perron(op);
      CHECK(r_derivative(op, t) ==
            doctest::Approx(-1.0 / ((1.0 + gamma) * (1.0 + gamma))).epsilon(1e-6));
    }
  }
  SUBCASE("central difference cross-check on the AR(1) model") {
    const auto model = ar1_gauss_quadratic();
    const GridSpec grid = GridSpec::with_n(300);
    const double gamma = 1.0, h = 1e-4;
    const auto op = discretize(model, gamma, grid);
    const auto t = perron(op);
    const double formula = r_derivative(op, t);
    const double fd = (perron(discretize(model, gamma + h, grid)).r -
                       perron(discretize(model, gamma - h, grid)).r) /
                      (2.0 * h);
    CHECK(formula == doctest::Approx(fd).epsilon(1e-3));
  }
}

TEST_CASE("drift condition checks") {
  const auto model = ar1_gauss_quadratic();  // |alpha|^r0 = 0.25
  const GridSpec grid = GridSpec::with_n(300);

  SUBCASE("precondition") {
    CHECK_THROWS_AS(drift_check(model, 0.0, 1.0, 0.2, grid), std::invalid_argument);
  }
  SUBCASE("gamma=0 drift holds with a finite constant") {
    const auto rep = drift_check(model, 0.0, 1.0, 0.5, grid);
    CHECK(rep.holds);
    CHECK(rep.L_constant >= 0.0);
    CHECK(std::isfinite(rep.L_constant));
  }
  SUBCASE("tilted leading coefficient is damped by e^{-gamma beta}") {
    const double gamma = 1.0, beta = 2.0, delta = 0.5;
    const auto rep = drift_check(model, gamma, beta, delta, grid);
    CHECK(rep.holds);
    CHECK(rep.leading_coeff <= std::exp(-gamma * beta) * delta + 1e-12);
  }
  SUBCASE("P_inf drift bound") {
    const auto rep = drift_check(model, kInf, 1.0, 0.5, grid);
    CHECK(rep.holds);
    CHECK(rep.leading_coeff == 0.0);
  }
}

TEST_CASE("operator continuity modulus") {
  const auto model = ar1_gauss_quadratic();
  const GridSpec grid = GridSpec::with_n(200);

  SUBCASE("zero at equal tilts") {
    const auto c = continuity_modulus(model, 1.0, 1.0, 0.25, 0.5, grid);
    CHECK(c.measured_norm == 0.0);
  }
  SUBCASE("constant observable factors through the scalar tilt") {
    Eigen::MatrixXd p(2, 2);
    p << 0.6, 0.4, 0.3, 0.7;
    const double c0 = 0.8;
    const auto fs = MarkovModel::finite_state(p, Observable::table({c0, c0}));
    const double gamma = 0.4, gp = 0.9;
    const auto cb = continuity_modulus(fs, gamma, gp, 0.0, 1.0, grid);
    CHECK(cb.measured_norm ==
          doctest::Approx(std::abs(std::exp(-gamma * c0) - std::exp(-gp * c0))).epsilon(1e-12));
    CHECK(cb.measured_norm <= cb.lemma_bound + 1e-12);
  }
  SUBCASE("AR(1) quadratic within the lemma bound") {
    const auto c = continuity_modulus(model, 1.0, 1.1, 0.25, 0.5, grid);
    CHECK(c.measured_norm > 0.0);
    CHECK(c.measured_norm <= c.lemma_bound);
  }
  SUBCASE("missing sup xi/V bound is an error") {
    const auto m = MarkovModel::ar1(0.5, NoiseSpec::gaussian(1.0), 2.0,
                                    Observable::expression("min(x*x, abs(x))"));
    CHECK_THROWS_AS(continuity_modulus(m, 0.5, 0.6, 0.25, 0.5, grid), std::invalid_argument);
  }
}

TEST_CASE("monotone radius and Hoelder positivity along a tilt grid") {
  const auto model = ar1_gauss_quadratic();
  const GridSpec grid = GridSpec::with_n(250);
  const double gammas[] = {0.25, 0.5, 1.0, 2.0, 4.0};
  double prev = perron(discretize(model, 0.0, grid)).r;
  double r_at[5];
  for (int i = 0; i < 5; ++i) {
    r_at[i] = perron(discretize(model, gammas[i], grid)).r;
    CHECK(r_at[i] <= prev + 1e-8);
    prev = r_at[i];
  }
  // r(gamma) >= r(gamma0)^(gamma/gamma0) - 1e-6 for gamma0 < gamma
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      CHECK(r_at[j] >= std::pow(r_at[i], gammas[j] / gammas[i]) - 1e-6);
    }
  }
}

TEST_CASE("radius vanishes along doubling tilts when xi > 0 a.e.") {
  const auto model = ar1_gauss_quadratic();
  const GridSpec grid = GridSpec::with_n(250);
  double prev = 1.0;
  for (double gamma : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double r = perron(discretize(model, gamma, grid)).r;
    CHECK(r < prev);
    prev = r;
  }
  CHECK(prev < 0.2);
}

TEST_CASE("Doeblin-Fortet inequality on the finite Knudsen gas") {
  Eigen::MatrixXd u(4, 4);
  u << 0.4, 0.3, 0.2, 0.1, 0.2, 0.4, 0.3, 0.1, 0.1, 0.2, 0.4, 0.3, 0.3, 0.1, 0.2, 0.4;
  const Eigen::VectorXd pi =
      MarkovModel::finite_state(u, Observable::table({0, 0, 0, 0})).stationary_vector();
  const double alpha = 0.65;
  const auto model =
      MarkovModel::knudsen_finite(alpha, u, pi, Observable::table({0.0, 0.5, 1.0, 1.5}));

  const double gamma = 0.8;
  const auto op = discretize(model, gamma, GridSpec{});
  const double a = 2.0;

  auto norm_a = [&](const Eigen::VectorXd& f) {
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) acc += pi[i] * std::pow(std::abs(f[i]), a);
    return std::pow(acc, 1.0 / a);
  };
  auto norm_1 = [&](const Eigen::VectorXd& f) {
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) acc += pi[i] * std::abs(f[i]);
    return acc;
  };

  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd f(4);
    for (int i = 0; i < 4; ++i) f[i] = normal(rng);
    const Eigen::VectorXd kf = op.matrix * f;
    CHECK(norm_a(kf) <= (1.0 - alpha) * norm_a(f) + alpha * norm_1(f) + 1e-12);
  }

  // essential-radius proxy: sub-dominant modulus below (1-alpha) ||U_gamma||
  const auto t = perron(op);
  Eigen::VectorXd tilt(4);
  for (int i = 0; i < 4; ++i) tilt[i] = std::exp(-gamma * op.xi[i]);
  const Eigen::MatrixXd u_gamma = u * tilt.asDiagonal();
  const double u_norm = u_gamma.cwiseAbs().rowwise().sum().maxCoeff();
  CHECK(t.sub_modulus <= (1.0 - alpha) * u_norm + 1e-8);
}

TEST_CASE("grid refinement stability") {
  const auto model = ar1_gauss_quadratic();
  const double r400 = perron(discretize(model, 1.0, GridSpec::with_n(400))).r;
  const double r800 = perron(discretize(model, 1.0, GridSpec::with_n(800))).r;
  CHECK(std::abs(r400 - r800) < 1e-5);
}

TEST_CASE("dense eigensolver cross-check on random finite chains") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto model = random_finite(4, seed);
    const auto op = discretize(model, 0.6, GridSpec{});
    const auto t = perron(op, 1e-12);
    const Eigen::VectorXcd eig = op.matrix.eigenvalues();
    double top = 0.0;
    for (int i = 0; i < eig.size(); ++i) top = std::max(top, std::abs(eig[i]));
    CHECK(t.r == doctest::Approx(top).epsilon(1e-9));
  }
}

TEST_CASE("power iteration failure reports the oscillation") {
  // Perron needs a positive dominant direction; a permutation has tied
  // complex eigenvalues of modulus 1 and can never settle.
  Eigen::MatrixXd p(3, 3);
  p << 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0;
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  const auto model = MarkovModel::finite_state(p, Observable::table({0.3, 0.9, 1.7}));
  const auto op = discretize(model, 0.8, GridSpec{});
  CHECK_THROWS_AS(perron(op, 1e-12, 400), PerronNonConvergence);
}
