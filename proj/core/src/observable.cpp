#include "merg/observable.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace merg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Observable Observable::power(double q, double scale) {
  if (q < 0.0) throw std::invalid_argument("observable power: q must be >= 0");
  if (scale <= 0.0) throw std::invalid_argument("observable power: scale must be > 0");
  Observable o;
  o.kind_ = Kind::power;
  o.param_q_ = q;
  o.param_scale_ = scale;
  o.growth_degree_ = q;
  o.coercive_ = q > 0.0 ? Coercivity::yes : Coercivity::no;
  o.positive_ae_ = true;  // scale*|x|^q vanishes on a Lebesgue-null set (q>0) or nowhere
  return o;
}

Observable Observable::quadratic() { return power(2.0, 1.0); }

Observable Observable::constant(double c) {
  if (c < 0.0) throw std::invalid_argument("observable constant: c must be >= 0");
  Observable o;
  o.kind_ = Kind::constant;
  o.param_c_ = c;
  o.growth_degree_ = 0.0;
  o.coercive_ = Coercivity::no;
  o.positive_ae_ = c > 0.0;
  return o;
}

Observable Observable::exp_decay() {
  Observable o;
  o.kind_ = Kind::exp_decay;
  o.growth_degree_ = 0.0;
  o.coercive_ = Coercivity::no;
  o.positive_ae_ = true;
  return o;
}

Observable Observable::expression(const std::string& text) {
  Observable o;
  o.kind_ = Kind::expression;
  o.expr_ = Expression::parse(text);
  o.growth_degree_ = o.expr_->growth_degree();
  const double lower = o.expr_->lower_growth_degree();
  if (lower > 0.0) {
    o.coercive_ = Coercivity::yes;
  } else if (o.growth_degree_ <= 0.0) {
    o.coercive_ = Coercivity::no;
  } else {
    o.coercive_ = Coercivity::unknown;
  }
  o.positive_ae_ = false;  // user-supplied flag, never inferred
  return o;
}

Observable Observable::table(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("observable table: empty value list");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("observable table: values must be finite and >= 0");
    }
  }
  Observable o;
  o.kind_ = Kind::table;
  o.table_ = std::move(values);
  o.growth_degree_ = 0.0;
  o.coercive_ = Coercivity::no;
  bool all_pos = true;
  for (double v : o.table_) all_pos = all_pos && v > 0.0;
  o.positive_ae_ = all_pos;
  return o;
}

double Observable::operator()(double x) const {
  switch (kind_) {
    case Kind::power:
      return param_scale_ * std::pow(std::abs(x), param_q_);
    case Kind::quadratic:
      return x * x;
    case Kind::constant:
      return param_c_;
    case Kind::exp_decay:
      return std::exp(-std::abs(x));
    case Kind::expression:
      return expr_->eval(x);
    case Kind::table: {
      const auto i = static_cast<long>(std::llround(x));
      if (i < 0 || i >= static_cast<long>(table_.size())) {
        throw std::out_of_range("observable table: state index out of range");
      }
      return table_[static_cast<std::size_t>(i)];
    }
  }
  throw std::logic_error("observable: corrupt kind");
}

std::optional<double> Observable::sup_ratio_bound(double r0) const {
  if (user_sup_ratio_) return user_sup_ratio_;
  switch (kind_) {
    case Kind::power:
      // scale*|x|^q <= scale*(1+|x|)^r0 whenever q <= r0
      return param_q_ <= r0 ? std::optional<double>(param_scale_) : std::nullopt;
    case Kind::quadratic:
      return r0 >= 2.0 ? std::optional<double>(1.0) : std::nullopt;
    case Kind::constant:
      return param_c_;
    case Kind::exp_decay:
      return 1.0;
    case Kind::expression:
      return std::nullopt;
    case Kind::table: {
      double m = 0.0;
      for (double v : table_) m = std::max(m, v);
      return m;
    }
  }
  return std::nullopt;
}

std::string Observable::describe() const {
  switch (kind_) {
    case Kind::power:
      return "power(q=" + std::to_string(param_q_) + ", scale=" + std::to_string(param_scale_) + ")";
    case Kind::quadratic: return "quadratic";
    case Kind::constant: return "constant(" + std::to_string(param_c_) + ")";
    case Kind::exp_decay: return "exp_decay";
    case Kind::expression: return "expression(" + expr_->print() + ")";
    case Kind::table: return "table(" + std::to_string(table_.size()) + " states)";
  }
  return "?";
}

Eigen::VectorXd evaluate_observable_on_grid(const Observable& obs,
                                            const Eigen::VectorXd& nodes) {
  if (nodes.size() == 0) {
    throw std::invalid_argument("evaluate_observable_on_grid: empty grid");
  }
  Eigen::VectorXd out(nodes.size());
  for (Eigen::Index i = 0; i < nodes.size(); ++i) {
    const double v = obs(nodes[i]);
    if (!std::isfinite(v) || v < 0.0) {
      throw std::domain_error(
          "observable evaluates to a negative or non-finite value at x=" +
          std::to_string(nodes[i]));
    }
    out[i] = v;
  }
  return out;
}

}  // namespace merg
