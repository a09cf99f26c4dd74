#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "merg/expression.hpp"

namespace merg {

enum class Coercivity { yes, no, unknown };

// Non-negative observable xi: X -> [0, inf). The `table` kind holds per-state
// values for finite chains; every other kind is a function of a real state.
class Observable {
 public:
  enum class Kind { power, quadratic, constant, exp_decay, expression, table };

  static Observable power(double q, double scale = 1.0);
  static Observable quadratic();
  static Observable constant(double c);
  static Observable exp_decay();
  static Observable expression(const std::string& text);
  static Observable table(std::vector<double> values);

  Kind kind() const { return kind_; }

  double operator()(double x) const;

  // Upper bound on polynomial growth; +inf for super-polynomial expressions.
  double growth_degree() const { return growth_degree_; }

  Coercivity coercive() const { return coercive_; }
  bool positive_almost_everywhere() const { return positive_ae_; }

  // Constant c with xi <= c * (1+|x|)^r0 when certifiable; expressions need a
  // user-supplied bound (set_sup_ratio_bound).
  std::optional<double> sup_ratio_bound(double r0) const;

  // User overrides recorded from configuration; never inferred.
  void set_positive_ae(bool v) { positive_ae_ = v; }
  void set_coercive(bool v) { coercive_ = v ? Coercivity::yes : Coercivity::no; }
  void set_sup_ratio_bound(double c) { user_sup_ratio_ = c; }
  void set_allow_unbounded(bool v) { allow_unbounded_ = v; }
  bool allow_unbounded() const { return allow_unbounded_; }

  const std::vector<double>& table_values() const { return table_; }
  const std::optional<Expression>& expr() const { return expr_; }
  double constant_value() const { return param_c_; }
  double power_exponent() const { return param_q_; }
  double power_scale() const { return param_scale_; }

  std::string describe() const;

 private:
  Observable() = default;

  Kind kind_ = Kind::constant;
  double param_q_ = 1.0;
  double param_scale_ = 1.0;
  double param_c_ = 0.0;
  std::optional<Expression> expr_;
  std::vector<double> table_;

  double growth_degree_ = 0.0;
  Coercivity coercive_ = Coercivity::unknown;
  bool positive_ae_ = false;
  bool allow_unbounded_ = false;
  std::optional<double> user_sup_ratio_;
};

// Evaluates xi on grid nodes; throws if any value is negative or non-finite.
Eigen::VectorXd evaluate_observable_on_grid(const Observable& obs,
                                            const Eigen::VectorXd& nodes);

}  // namespace merg
