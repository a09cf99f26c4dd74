#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace merg {

// Parse failure with the 0-based offset of the offending character, so the
// caller can render a caret under the input.
struct ExprParseError : std::runtime_error {
  ExprParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg), position(pos) {}
  std::size_t position;
};

struct ExprEvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Expression in one variable over {literals, x, + - * / ^, neg, abs, exp,
// min, max, pow}. Immutable after parsing.
class Expression {
 public:
  enum class Kind {
    Constant,
    Var,
    Neg,
    Abs,
    Exp,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
  };

  struct Node {
    Kind kind;
    double value = 0.0;  // Constant only
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  static Expression parse(std::string_view text);

  double eval(double x) const;

  // Canonical fully parenthesized form; parse(print()) reproduces the tree.
  std::string print() const;

  bool equals(const Expression& other) const;

  // Upper bound on the polynomial growth order of |f(x)| as |x| -> inf;
  // +inf when the expression can grow super-polynomially (e.g. exp(x)).
  double growth_degree() const;

  // Lower bound on the eventual growth order, -inf when unknown. A positive
  // value certifies coercivity.
  double lower_growth_degree() const;

  const Node& root() const { return *root_; }

 private:
  explicit Expression(std::shared_ptr<const Node> root)
      : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace merg
