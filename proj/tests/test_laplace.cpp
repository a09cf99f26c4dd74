#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "merg/laplace.hpp"
#include "merg/quadrature.hpp"

using namespace merg;

namespace {

MarkovModel resampling_exp1() {
  const auto pi = DistributionSpec::exponential(1.0);
  return MarkovModel::knudsen(0.7, ResampleU{pi}, pi, Observable::power(1.0));
}

MarkovModel ar1_gauss_quadratic(double alpha = 0.5, double sigma = 1.0) {
  return MarkovModel::ar1(alpha, NoiseSpec::gaussian(sigma), 2.0, Observable::quadratic());
}

// Brute-force oracle for E[exp(-gamma sum_{k=0}^n X_k^2)], X_0 = x0,
// X_k = alpha X_{k-1} + sigma Z_k, by tensor-product quadrature over
// (Z_1..Z_n). Only usable for n <= 3.
double riccati_brute_force(double alpha, double sigma, double gamma, int n, double x0) {
  const int m = n <= 2 ? 400 : 160;
  const auto rule = gauss_legendre(m, -9.0, 9.0);
  const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);

  double total = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (;;) {
    double weight = 1.0;
    double x = x0;
    double s = x0 * x0;
    for (int k = 0; k < n; ++k) {
      const double z = rule.nodes[idx[static_cast<std::size_t>(k)]];
      weight *= rule.weights[idx[static_cast<std::size_t>(k)]] * inv_sqrt2pi *
                std::exp(-0.5 * z * z);
      x = alpha * x + sigma * z;
      s += x * x;
    }
    total += weight * std::exp(-gamma * s);

    int carry = n - 1;
    while (carry >= 0 && ++idx[static_cast<std::size_t>(carry)] == m) {
      idx[static_cast<std::size_t>(carry)] = 0;
      --carry;
    }
    if (carry < 0) break;
  }
  return total;
}

}  // namespace

TEST_CASE("gamma=0 gives value 1 with zero error") {
  const auto model = resampling_exp1();
  const auto e = laplace_mc(model, InitialLaw::stationary(), 0.0, 5, 2000, 3);
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.std_error == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("i.i.d. product law: Exp(1) with identity observable") {
  const auto model = resampling_exp1();
  // E[e^{-S_4}] = (1/2)^5 under P_pi
  const auto mc = laplace_mc(model, InitialLaw::stationary(), 1.0, 4, 100000, 17);
  CHECK(std::abs(mc.value - 0.03125) <= 3.0 * mc.std_error);

  const auto oracle = laplace_oracle_iid(0.5, 1.0, 4);
  CHECK(oracle.value == doctest::Approx(1.0 / 32.0).epsilon(1e-14));
  CHECK(oracle.std_error == 0.0);
}

TEST_CASE("iid oracle trivia") {
  CHECK(laplace_oracle_iid(1.0, 0.0, 9).value == doctest::Approx(1.0));
  // constant observable c: L(gamma) = e^{-gamma c} and the sum is deterministic
  const double gamma = 0.7, c = 1.3;
  const int n = 5;
  CHECK(laplace_oracle_iid(std::exp(-gamma * c), gamma, n).value ==
        doctest::Approx(std::exp(-gamma * c * (n + 1))).epsilon(1e-14));
}

TEST_CASE("marginal laplace by quadrature: Exp(1) through xi(x)=x") {
  const auto pi = DistributionSpec::exponential(1.0);
  for (double gamma : {0.0, 0.5, 1.0, 3.0}) {
    CHECK(marginal_laplace(pi, Observable::power(1.0), gamma) ==
          doctest::Approx(1.0 / (1.0 + gamma)).epsilon(1e-10));
  }
}

TEST_CASE("riccati oracle") {
  SUBCASE("gamma=0 is 1") {
    CHECK(laplace_oracle_riccati(0.5, 1.0, 0.0, 7, InitialLaw::point(2.0)).value ==
          doctest::Approx(1.0));
    CHECK(laplace_oracle_riccati(0.5, 1.0, 0.0, 7, InitialLaw::stationary()).value ==
          doctest::Approx(1.0));
  }
  SUBCASE("n=0 from delta_x is e^{-gamma x^2}") {
    CHECK(laplace_oracle_riccati(0.5, 1.0, 0.3, 0, InitialLaw::point(1.5)).value ==
          doctest::Approx(std::exp(-0.3 * 2.25)).epsilon(1e-14));
  }
  SUBCASE("recursion agrees with brute-force quadrature for n <= 3") {
    for (int n : {1, 2, 3}) {
      for (double gamma : {0.1, 0.6}) {
        for (double x0 : {0.0, 1.0}) {
          const double oracle =
              laplace_oracle_riccati(0.5, 1.0, gamma, n, InitialLaw::point(x0)).value;
          const double brute = riccati_brute_force(0.5, 1.0, gamma, n, x0);
          CHECK(oracle == doctest::Approx(brute).epsilon(1e-8));
        }
      }
    }
  }
  SUBCASE("MC agrees within 3 standard errors") {
    const auto model = ar1_gauss_quadratic();
    const auto mc = laplace_mc(model, InitialLaw::point(0.0), 0.1, 3, 100000, 23);
    const double oracle =
        laplace_oracle_riccati(0.5, 1.0, 0.1, 3, InitialLaw::point(0.0)).value;
    CHECK(std::abs(mc.value - oracle) <= 3.0 * mc.std_error);
  }
}

TEST_CASE("finite-state oracle") {
  SUBCASE("identity chain with zero observable") {
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd pi(2);
    pi << 0.5, 0.5;
    const auto model = MarkovModel::finite_state(p, Observable::table({0.0, 0.0}), pi);
    for (int n : {0, 3, 50}) {
      CHECK(laplace_oracle_finite(model, 2.0, n, InitialLaw::stationary()).value ==
            doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("one-state chain with constant observable") {
    Eigen::MatrixXd p = Eigen::MatrixXd::Ones(1, 1);
    const auto model = MarkovModel::finite_state(p, Observable::table({0.8}));
    const double gamma = 0.9;
    for (int n : {0, 1, 6}) {
      CHECK(laplace_oracle_finite(model, gamma, n, InitialLaw::stationary()).value ==
            doctest::Approx(std::exp(-gamma * 0.8 * (n + 1))).epsilon(1e-13));
    }
  }
  SUBCASE("random 3-state chain cross-checked by Monte Carlo") {
    Eigen::MatrixXd p(3, 3);
    p << 0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.25, 0.25, 0.5;
    const auto model = MarkovModel::finite_state(p, Observable::table({0.2, 1.1, 0.7}));
    const auto mc = laplace_mc(model, InitialLaw::stationary(), 0.8, 6, 100000, 31);
    const double oracle = laplace_oracle_finite(model, 0.8, 6, InitialLaw::stationary()).value;
    CHECK(std::abs(mc.value - oracle) <= 3.0 * mc.std_error);
  }
}

TEST_CASE("laplace estimates are monotone and in range") {
  auto series = make_riccati_series(0.5, 1.0, 0.4, InitialLaw::stationary());
  double prev = 1.0;
  for (int n = 0; n < 40; ++n) {
    const double v = std::exp(series->log_value(n));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  // monotone in gamma at fixed n (exact for oracles)
  for (int n : {0, 5, 10}) {
    const double lo =
        laplace_oracle_riccati(0.5, 1.0, 0.3, n, InitialLaw::stationary()).value;
    const double hi =
        laplace_oracle_riccati(0.5, 1.0, 0.9, n, InitialLaw::stationary()).value;
    CHECK(hi <= lo);
  }
}

TEST_CASE("generating function") {
  SUBCASE("g(0, 1/2) = 2") {
    auto series = make_iid_series(1.0);  // xi == 0: every L^(n) = 1
    const auto g = generating_function(*series, 0.0, 0.5);
    REQUIRE(g.status == SeriesStatus::finite);
    CHECK(g.value == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("constant observable: geometric closed form") {
    const double gamma = 0.8, c = 0.6, lambda = 1.4;
    const double l = std::exp(-gamma * c);
    auto series = make_iid_series(l);
    const auto g = generating_function(*series, gamma, lambda);
    REQUIRE(g.status == SeriesStatus::finite);
    CHECK(g.value == doctest::Approx(l / (1.0 - lambda * l)).epsilon(1e-9));
  }
  SUBCASE("resampling Exp(1) at gamma=2, lambda=2") {
    auto series = make_iid_series(1.0 / 3.0);
    const auto g = generating_function(*series, 2.0, 2.0);
    REQUIRE(g.status == SeriesStatus::finite);
    CHECK(g.value == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("divergence is flagged") {
    auto series = make_iid_series(0.75);  // lambda L = 1.5 > 1
    const auto g = generating_function(*series, 1.0, 2.0);
    CHECK(g.status == SeriesStatus::divergent);
  }
  SUBCASE("terms pinned at 1 diverge") {
    auto series = make_iid_series(0.5);
    const auto g = generating_function(*series, 1.0, 2.0);
    CHECK(g.status == SeriesStatus::divergent);
  }
  SUBCASE("ratio straddling 1 within jitter is inconclusive") {
    struct Jitter final : LaplaceSeries {
      double log_value(int n) override {
        return -1e-12 * n + 1e-10 * std::sin(static_cast<double>(n));
      }
      LaplaceSource source() const override { return LaplaceSource::monte_carlo; }
    } series;
    const auto g = generating_function(series, 1.0, 1.0, 1e-6, 5000);
    CHECK(g.status == SeriesStatus::inconclusive);
  }
}

TEST_CASE("oracle agreement is exact-to-exact on a doubly covered model") {
  // alpha=1 finite Knudsen is i.i.d.: the product oracle and the matrix
  // oracle must coincide to floating-point accuracy
  Eigen::MatrixXd u(3, 3);
  u << 0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.3, 0.3, 0.4;
  const Eigen::VectorXd pi =
      MarkovModel::finite_state(u, Observable::table({0, 0, 0})).stationary_vector();
  const std::vector<double> xi = {0.3, 1.0, 1.7};
  const auto model = MarkovModel::knudsen_finite(1.0, u, pi, Observable::table(xi));
  REQUIRE(model.is_iid());

  const double gamma = 0.8;
  double marginal = 0.0;
  for (int i = 0; i < 3; ++i) marginal += pi[i] * std::exp(-gamma * xi[static_cast<std::size_t>(i)]);
  for (int n : {0, 1, 4, 9}) {
    const double via_product = laplace_oracle_iid(marginal, gamma, n).value;
    const double via_matrix =
        laplace_oracle_finite(model, gamma, n, InitialLaw::stationary()).value;
    CHECK(via_product == doctest::Approx(via_matrix).epsilon(1e-8));
  }
}

TEST_CASE("thread count does not change Monte Carlo output") {
  const auto model = ar1_gauss_quadratic();
  setenv("MERG_THREADS", "1", 1);
  const auto a = laplace_mc_curve(model, InitialLaw::point(0.0), 0.5, 6, 20000, 77);
  setenv("MERG_THREADS", "4", 1);
  const auto b = laplace_mc_curve(model, InitialLaw::point(0.0), 0.5, 6, 20000, 77);
  unsetenv("MERG_THREADS");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].std_error == b[i].std_error);
  }
}
