#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "merg/distributions.hpp"
#include "merg/observable.hpp"

namespace merg {

// Weight V^a(x) = (1+|x|)^(r0*a) of the weighted supremum norm.
struct WeightFunction {
  double r0 = 1.0;
  double exponent = 1.0;  // a in (0, 1]

  WeightFunction() = default;
  WeightFunction(double r0_, double a);

  double operator()(double x) const;
};

struct Ar1Spec {
  double alpha;
  NoiseSpec noise;
  double r0;
};

// Knudsen U-kernels: full resampling from a fixed law, or an AR(1)-type move.
struct ResampleU {
  DistributionSpec law;
};
struct Ar1U {
  double alpha;
  NoiseSpec noise;
};
using ContinuousU = std::variant<ResampleU, Ar1U>;

// Knudsen gas on R: P = alpha*pi + (1-alpha)*U with pi stationary for U.
struct KnudsenSpec {
  double alpha;
  ContinuousU u;
  DistributionSpec pi;
};

// Knudsen gas on a finite state space.
struct KnudsenFiniteSpec {
  double alpha;
  Eigen::MatrixXd u;
  Eigen::VectorXd pi;
};

struct FiniteStateSpec {
  Eigen::MatrixXd transition;
  Eigen::VectorXd stationary;
};

class InitialLaw {
 public:
  enum class Kind { point, stationary, law };

  static InitialLaw point(double x) {
    InitialLaw l;
    l.kind_ = Kind::point;
    l.x_ = x;
    return l;
  }
  static InitialLaw stationary() {
    InitialLaw l;
    l.kind_ = Kind::stationary;
    return l;
  }
  static InitialLaw law(DistributionSpec d) {
    InitialLaw l;
    l.kind_ = Kind::law;
    l.dist_ = std::move(d);
    return l;
  }

  Kind kind() const { return kind_; }
  double point_value() const { return x_; }
  const DistributionSpec& dist() const { return *dist_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::stationary;
  double x_ = 0.0;
  std::optional<DistributionSpec> dist_;
};

// The object (P, pi, xi): a Markov kernel with its stationary law and the
// non-negative observable driving the additive functional.
class MarkovModel {
 public:
  using Variant = std::variant<Ar1Spec, KnudsenSpec, KnudsenFiniteSpec, FiniteStateSpec>;

  static MarkovModel ar1(double alpha, NoiseSpec noise, double r0, Observable xi);
  static MarkovModel knudsen(double alpha, ContinuousU u, DistributionSpec pi, Observable xi);
  static MarkovModel knudsen_finite(double alpha, Eigen::MatrixXd u, Eigen::VectorXd pi,
                                    Observable xi);
  // Stationary vector computed from the transition matrix when not supplied.
  static MarkovModel finite_state(Eigen::MatrixXd transition, Observable xi,
                                  std::optional<Eigen::VectorXd> stationary = std::nullopt);

  const Variant& variant() const { return variant_; }
  const Observable& xi() const { return xi_; }
  Observable& xi() { return xi_; }

  bool is_finite() const;
  bool is_ar1() const { return std::holds_alternative<Ar1Spec>(variant_); }
  const Ar1Spec* as_ar1() const { return std::get_if<Ar1Spec>(&variant_); }
  const KnudsenSpec* as_knudsen() const { return std::get_if<KnudsenSpec>(&variant_); }
  const KnudsenFiniteSpec* as_knudsen_finite() const {
    return std::get_if<KnudsenFiniteSpec>(&variant_);
  }
  const FiniteStateSpec* as_finite_state() const {
    return std::get_if<FiniteStateSpec>(&variant_);
  }

  int num_states() const;  // finite variants only

  // Full transition matrix (mixture assembled for Knudsen); finite only.
  Eigen::MatrixXd transition_matrix() const;
  Eigen::VectorXd stationary_vector() const;  // finite only

  // Chain is i.i.d. under its own moves: resampling Knudsen (U = pi) or the
  // degenerate mixture alpha = 1.
  bool is_iid() const;

  // Marginal law of a single step for i.i.d. chains.
  const DistributionSpec& iid_marginal() const;

  double weight_r0() const;  // r0 for AR1, 0 otherwise (V == 1)

  std::string describe() const;

 private:
  MarkovModel(Variant v, Observable xi) : variant_(std::move(v)), xi_(std::move(xi)) {}
  Variant variant_;
  Observable xi_;
};

// ---- operations -----------------------------------------------------------

// xi evaluated at a path state (table lookup for finite chains).
double observable_at(const MarkovModel& model, double state);

// Simulates x_0..x_n. Identical inputs give bit-identical paths. Finite
// chains return state indices stored as doubles.
std::vector<double> sample_path(const MarkovModel& model, const InitialLaw& initial,
                                int n, std::uint64_t seed);

// Transition density p(x -> y); matrix entry for finite chains.
double transition_density(const MarkovModel& model, double x, double y);

// Default symmetric/one-sided grid interval for continuous-state models:
// sized so that eps of kernel and stationary mass is lost outside.
std::pair<double, double> default_domain(const MarkovModel& model, double eps = 1e-9);

// Stationary standard deviation of the Gaussian AR(1) chain.
double ar1_gaussian_stationary_sd(const Ar1Spec& spec);

}  // namespace merg
