#include <doctest.h>

#include <cmath>
#include <numeric>

#include "merg/markov_model.hpp"
#include "merg/quadrature.hpp"

using namespace merg;

namespace {

MarkovModel two_state_identity() {
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(2, 2);
  // identity chain: every probability vector is stationary; pass one in
  Eigen::VectorXd pi(2);
  pi << 0.5, 0.5;
  return MarkovModel::finite_state(p, Observable::table({0.0, 1.0}), pi);
}

}  // namespace

TEST_CASE("absorbing identity chain gives a constant path") {
  const auto model = two_state_identity();
  const auto path = sample_path(model, InitialLaw::point(0), 5, 42);
  REQUIRE(path.size() == 6);
  for (double x : path) CHECK(x == 0.0);
}

TEST_CASE("degenerate Knudsen mixture (alpha=1) resamples pi every step") {
  const auto pi = DistributionSpec::exponential(1.0);
  const auto model = MarkovModel::knudsen(1.0, ResampleU{pi}, pi, Observable::power(1.0));
  CHECK(model.is_iid());

  const auto path = sample_path(model, InitialLaw::point(7.0), 3, 11);
  REQUIRE(path.size() == 4);
  CHECK(path[0] == 7.0);
  for (std::size_t k = 1; k < path.size(); ++k) CHECK(path[k] >= 0.0);

  // long-run mean of Exp(1) draws
  const auto long_path = sample_path(model, InitialLaw::stationary(), 20000, 5);
  const double mean =
      std::accumulate(long_path.begin(), long_path.end(), 0.0) / long_path.size();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("AR(1) tail variance matches sigma^2/(1-alpha^2)") {
  const auto model =
      MarkovModel::ar1(0.5, NoiseSpec::gaussian(1.0), 2.0, Observable::quadratic());
  const auto path = sample_path(model, InitialLaw::point(0.0), 10000, 123);
  double mean = 0.0, var = 0.0;
  const std::size_t burn = 100;
  const double count = static_cast<double>(path.size() - burn);
  for (std::size_t k = burn; k < path.size(); ++k) mean += path[k];
  mean /= count;
  for (std::size_t k = burn; k < path.size(); ++k) var += (path[k] - mean) * (path[k] - mean);
  var /= count - 1;
  CHECK(var == doctest::Approx(4.0 / 3.0).epsilon(0.05));
}

TEST_CASE("seed determinism and seed sensitivity") {
  const auto model =
      MarkovModel::ar1(0.3, NoiseSpec::laplace(0.7), 1.0, Observable::power(1.0));
  const auto a = sample_path(model, InitialLaw::point(1.0), 50, 99);
  const auto b = sample_path(model, InitialLaw::point(1.0), 50, 99);
  const auto c = sample_path(model, InitialLaw::point(1.0), 50, 100);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("transition densities") {
  SUBCASE("alpha=0 decouples: standard normal pdf independent of x") {
    const auto model =
        MarkovModel::ar1(0.0, NoiseSpec::gaussian(1.0), 2.0, Observable::quadratic());
    const double phi0 = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
    CHECK(transition_density(model, -3.0, 0.0) == doctest::Approx(phi0).epsilon(1e-12));
    CHECK(transition_density(model, 7.0, 0.0) == doctest::Approx(phi0).epsilon(1e-12));
    CHECK(transition_density(model, 0.0, 1.0) ==
          doctest::Approx(phi0 * std::exp(-0.5)).epsilon(1e-12));
  }
  SUBCASE("AR(1) alpha=0.5: density(2,1) is the normal pdf at 0") {
    const auto model =
        MarkovModel::ar1(0.5, NoiseSpec::gaussian(1.0), 2.0, Observable::quadratic());
    CHECK(transition_density(model, 2.0, 1.0) ==
          doctest::Approx(0.3989422804014327).epsilon(1e-12));
  }
  SUBCASE("finite state reads the matrix") {
    Eigen::MatrixXd p(2, 2);
    p << 0.9, 0.1, 0.2, 0.8;
    const auto model = MarkovModel::finite_state(p, Observable::table({0.0, 1.0}));
    CHECK(transition_density(model, 0, 1) == doctest::Approx(0.1));
    CHECK(transition_density(model, 1, 0) == doctest::Approx(0.2));
  }
}

TEST_CASE("noise densities integrate to one and stay positive") {
  const NoiseSpec noises[] = {NoiseSpec::gaussian(0.8), NoiseSpec::laplace(1.3),
                              NoiseSpec::student(4.0, 1.1)};
  for (const auto& noise : noises) {
    const double q = noise.abs_quantile(1e-12);
    // dyadic panels keep the quadrature sharp through the kink at 0 and the
    // polynomially decaying student tails; densities are even
    double mass = 0.0;
    double lo = 0.0;
    double hi = std::min(1.0, q);
    while (lo < q) {
      const auto rule = gauss_legendre(120, lo, hi);
      for (int i = 0; i < rule.size(); ++i) {
        const double p = noise.density(rule.nodes[i]);
        CHECK(p > 0.0);
        mass += 2.0 * rule.weights[i] * p;
      }
      lo = hi;
      hi = std::min(2.0 * hi, q);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("observable grid evaluation") {
  Eigen::VectorXd grid(3);
  grid << -1.0, 0.0, 2.0;

  SUBCASE("constant ln 2") {
    const auto v = evaluate_observable_on_grid(Observable::constant(std::log(2.0)), grid);
    for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("quadratic") {
    const auto v = evaluate_observable_on_grid(Observable::quadratic(), grid);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(4.0));
  }
  SUBCASE("expression, hand-evaluated") {
    Eigen::VectorXd x(1);
    x << 3.0;
    const auto v =
        evaluate_observable_on_grid(Observable::expression("x*x/(1+abs(x))"), x);
    CHECK(v[0] == doctest::Approx(2.25));
  }
  SUBCASE("negative values rejected") {
    CHECK_THROWS_AS(evaluate_observable_on_grid(Observable::expression("x - 100"), grid),
                    std::domain_error);
  }
  SUBCASE("empty grid rejected") {
    CHECK_THROWS_AS(evaluate_observable_on_grid(Observable::quadratic(), Eigen::VectorXd()),
                    std::invalid_argument);
  }
}

TEST_CASE("Knudsen mixture identity") {
  SUBCASE("finite-state: P = alpha 1 pi^T + (1-alpha) U entrywise") {
    Eigen::MatrixXd u(3, 3);
    u << 0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.3, 0.3, 0.4;
    // stationary pi of u
    Eigen::VectorXd pi = MarkovModel::finite_state(u, Observable::table({0, 0, 0}))
                             .stationary_vector();
    const double alpha = 0.6;
    const auto model =
        MarkovModel::knudsen_finite(alpha, u, pi, Observable::table({0.0, 1.0, 2.0}));
    const Eigen::MatrixXd p = model.transition_matrix();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        CHECK(p(i, j) ==
              doctest::Approx(alpha * pi[j] + (1 - alpha) * u(i, j)).epsilon(1e-12));
      }
    }
    CHECK((pi.transpose() * p - pi.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("resampling: density equals pi density") {
    const auto pi = DistributionSpec::exponential(2.0);
    const auto model = MarkovModel::knudsen(0.3, ResampleU{pi}, pi, Observable::power(1.0));
    for (double x : {0.0, 1.0, 5.0}) {
      for (double y : {0.1, 0.5, 2.0}) {
        CHECK(transition_density(model, x, y) == doctest::Approx(pi.density(y)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("finite-state occupation frequencies match the stationary law") {
  Eigen::MatrixXd p(3, 3);
  p << 0.5, 0.25, 0.25, 0.2, 0.6, 0.2, 0.25, 0.25, 0.5;
  const auto model = MarkovModel::finite_state(p, Observable::table({0.0, 1.0, 2.0}));
  const Eigen::VectorXd pi = model.stationary_vector();

  const int steps = 100000;
  const auto path = sample_path(model, InitialLaw::stationary(), steps, 7);
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (double x : path) counts[static_cast<int>(x)] += 1.0;
  for (int s = 0; s < 3; ++s) {
    const double freq = counts[s] / path.size();
    const double se = std::sqrt(pi[s] * (1 - pi[s]) / path.size());
    // occupation counts of a mixing chain: allow 3 binomial standard errors
    // inflated by the (small) autocorrelation factor
    CHECK(std::abs(freq - pi[s]) < 3.0 * 3.0 * se);
  }
}

TEST_CASE("construction guards") {
  CHECK_THROWS_AS(MarkovModel::ar1(1.5, NoiseSpec::gaussian(1.0), 2.0, Observable::quadratic()),
                  std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::student(1.5, 1.0), std::invalid_argument);
  // student df=3 has no 4th moment
  CHECK_THROWS_AS(
      MarkovModel::ar1(0.5, NoiseSpec::student(3.0, 1.0), 4.0, Observable::quadratic()),
      std::invalid_argument);

  Eigen::MatrixXd bad(2, 2);
  bad << 0.9, 0.2, 0.2, 0.8;  // row sums 1.1
  CHECK_THROWS_AS(MarkovModel::finite_state(bad, Observable::table({0.0, 1.0})),
                  std::invalid_argument);

  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd not_stationary(2);
  not_stationary << 0.9, 0.1;
  CHECK_THROWS_AS(MarkovModel::finite_state(p, Observable::table({0.0, 1.0}), not_stationary),
                  std::invalid_argument);

  // resampling U must coincide with pi
  CHECK_THROWS_AS(MarkovModel::knudsen(0.5, ResampleU{DistributionSpec::exponential(2.0)},
                                       DistributionSpec::exponential(1.0), Observable::power(1.0)),
                  std::invalid_argument);

  // stationary initial law unsupported for non-Gaussian AR(1)
  const auto lap = MarkovModel::ar1(0.5, NoiseSpec::laplace(1.0), 1.0, Observable::power(1.0));
  CHECK_THROWS_AS(sample_path(lap, InitialLaw::stationary(), 3, 1), std::invalid_argument);
}

TEST_CASE("weight function shape") {
  const WeightFunction v(2.0, 0.5);
  CHECK(v(0.0) == doctest::Approx(1.0));
  CHECK(v(3.0) == v(-3.0));
  CHECK(v(2.0) > v(1.0));
  CHECK(v(1.0) >= 1.0);
  CHECK_THROWS_AS(WeightFunction(2.0, 1.5), std::invalid_argument);
}
