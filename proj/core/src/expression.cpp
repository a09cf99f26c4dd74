#include "merg/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace merg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_const(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = Kind::Constant;
  n->value = v;
  return n;
}

// Recursive-descent parser:
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := unary ('^' factor)?
//   unary   := '-' unary | primary
//   primary := number | 'x' | ident '(' args ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr run() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExprParseError(msg, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) fail(std::string("expected '") + c + "' " + what);
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Kind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = make(Kind::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = make(Kind::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    NodePtr base = unary();
    if (accept('^')) return make(Kind::Pow, base, factor());
    return base;
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    return primary();
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];

    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();

    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isalnum(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
      const std::string_view ident = text_.substr(start, pos_ - start);
      if (ident == "x") return make(Kind::Var);
      if (ident == "abs") return call1(Kind::Abs);
      if (ident == "exp") return call1(Kind::Exp);
      if (ident == "min") return call2(Kind::Min);
      if (ident == "max") return call2(Kind::Max);
      if (ident == "pow") return call2(Kind::Pow);
      pos_ = start;
      fail("unknown identifier '" + std::string(ident) + "'");
    }

    if (accept('(')) {
      NodePtr e = expr();
      expect(')', "to close parenthesis");
      return e;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr call1(Kind kind) {
    expect('(', "after function name");
    NodePtr a = expr();
    expect(')', "to close argument list");
    return make(kind, a);
  }

  NodePtr call2(Kind kind) {
    expect('(', "after function name");
    NodePtr a = expr();
    expect(',', "between arguments");
    NodePtr b = expr();
    expect(')', "to close argument list");
    return make(kind, a, b);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        ++p;
        while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
        pos_ = p;
      }
    }
    const std::string tok(text_.substr(start, pos_ - start));
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return make_const(v);
    } catch (const std::exception&) {
      pos_ = start;
      fail("malformed number '" + tok + "'");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double eval_node(const Expression::Node& n, double x) {
  switch (n.kind) {
    case Kind::Constant: return n.value;
    case Kind::Var: return x;
    case Kind::Neg: return -eval_node(*n.lhs, x);
    case Kind::Abs: return std::abs(eval_node(*n.lhs, x));
    case Kind::Exp: return std::exp(eval_node(*n.lhs, x));
    case Kind::Add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case Kind::Sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case Kind::Mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case Kind::Div: {
      const double d = eval_node(*n.rhs, x);
      if (d == 0.0) throw ExprEvalError("division by zero");
      return eval_node(*n.lhs, x) / d;
    }
    case Kind::Pow: return std::pow(eval_node(*n.lhs, x), eval_node(*n.rhs, x));
    case Kind::Min: return std::min(eval_node(*n.lhs, x), eval_node(*n.rhs, x));
    case Kind::Max: return std::max(eval_node(*n.lhs, x), eval_node(*n.rhs, x));
  }
  throw ExprEvalError("corrupt expression node");
}

void print_node(const Expression::Node& n, std::string& out) {
  const auto binary = [&](const char* op) {
    out += '(';
    print_node(*n.lhs, out);
    out += ' ';
    out += op;
    out += ' ';
    print_node(*n.rhs, out);
    out += ')';
  };
  const auto call = [&](const char* name, bool two) {
    out += name;
    out += '(';
    print_node(*n.lhs, out);
    if (two) {
      out += ", ";
      print_node(*n.rhs, out);
    }
    out += ')';
  };
  switch (n.kind) {
    case Kind::Constant: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", n.value);
      out += buf;
      return;
    }
    case Kind::Var: out += 'x'; return;
    case Kind::Neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case Kind::Abs: call("abs", false); return;
    case Kind::Exp: call("exp", false); return;
    case Kind::Add: binary("+"); return;
    case Kind::Sub: binary("-"); return;
    case Kind::Mul: binary("*"); return;
    case Kind::Div: binary("/"); return;
    case Kind::Pow: call("pow", true); return;
    case Kind::Min: call("min", true); return;
    case Kind::Max: call("max", true); return;
  }
}

bool equal_nodes(const Expression::Node& a, const Expression::Node& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Kind::Constant) return a.value == b.value;
  if (bool(a.lhs) != bool(b.lhs) || bool(a.rhs) != bool(b.rhs)) return false;
  if (a.lhs && !equal_nodes(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !equal_nodes(*a.rhs, *b.rhs)) return false;
  return true;
}

// Whether f(x) >= 0 can be certified structurally.
bool nonneg_node(const Expression::Node& n) {
  switch (n.kind) {
    case Kind::Constant: return n.value >= 0.0;
    case Kind::Var: return false;
    case Kind::Neg: return false;
    case Kind::Abs: return true;
    case Kind::Exp: return true;
    case Kind::Add: return nonneg_node(*n.lhs) && nonneg_node(*n.rhs);
    case Kind::Sub: return false;
    case Kind::Mul: return nonneg_node(*n.lhs) && nonneg_node(*n.rhs);
    case Kind::Div: return nonneg_node(*n.lhs) && nonneg_node(*n.rhs);
    case Kind::Pow: return nonneg_node(*n.lhs);
    case Kind::Min: return nonneg_node(*n.lhs) && nonneg_node(*n.rhs);
    case Kind::Max: return nonneg_node(*n.lhs) || nonneg_node(*n.rhs);
  }
  return false;
}

double upper_degree(const Expression::Node& n);

// Eventual upper/lower boundedness of the expression as |x| -> inf.
struct Bounds {
  bool above;
  bool below;
};

Bounds boundedness(const Expression::Node& n) {
  switch (n.kind) {
    case Kind::Constant: return {true, true};
    case Kind::Var: return {false, false};
    case Kind::Neg: {
      const Bounds b = boundedness(*n.lhs);
      return {b.below, b.above};
    }
    case Kind::Abs: {
      const Bounds b = boundedness(*n.lhs);
      return {b.above && b.below, true};
    }
    case Kind::Exp: return {boundedness(*n.lhs).above, true};
    case Kind::Add: {
      const Bounds a = boundedness(*n.lhs), b = boundedness(*n.rhs);
      return {a.above && b.above, a.below && b.below};
    }
    case Kind::Sub: {
      const Bounds a = boundedness(*n.lhs), b = boundedness(*n.rhs);
      return {a.above && b.below, a.below && b.above};
    }
    case Kind::Mul:
    case Kind::Div:
    case Kind::Pow: {
      const Bounds a = boundedness(*n.lhs), b = boundedness(*n.rhs);
      const bool both = a.above && a.below && b.above && b.below;
      return {both, both};  // conservative
    }
    case Kind::Min: {
      const Bounds a = boundedness(*n.lhs), b = boundedness(*n.rhs);
      return {a.above || b.above, a.below && b.below};
    }
    case Kind::Max: {
      const Bounds a = boundedness(*n.lhs), b = boundedness(*n.rhs);
      return {a.above && b.above, a.below || b.below};
    }
  }
  return {false, false};
}

double lower_degree(const Expression::Node& n) {
  switch (n.kind) {
    case Kind::Constant: return n.value != 0.0 ? 0.0 : -kInf;
    case Kind::Var: return 1.0;
    case Kind::Neg: return lower_degree(*n.lhs);
    case Kind::Abs: return lower_degree(*n.lhs);
    case Kind::Exp:
      // exp of an argument bounded on both sides stays away from 0.
      return boundedness(*n.lhs).below && boundedness(*n.lhs).above ? 0.0 : -kInf;
    case Kind::Add:
      if (nonneg_node(*n.lhs) && nonneg_node(*n.rhs)) {
        return std::max(lower_degree(*n.lhs), lower_degree(*n.rhs));
      }
      return -kInf;  // cancellation possible
    case Kind::Sub: return -kInf;
    case Kind::Mul: {
      const double a = lower_degree(*n.lhs), b = lower_degree(*n.rhs);
      if (a == -kInf || b == -kInf) return -kInf;
      return a + b;
    }
    case Kind::Div: {
      const double a = lower_degree(*n.lhs), b = upper_degree(*n.rhs);
      if (a == -kInf || b == kInf) return -kInf;
      return a - b;
    }
    case Kind::Pow:
      if (n.rhs->kind == Kind::Constant && n.rhs->value >= 0.0 &&
          nonneg_node(*n.lhs)) {
        const double a = lower_degree(*n.lhs);
        return a == -kInf ? -kInf : a * n.rhs->value;
      }
      return -kInf;
    case Kind::Min:
      return std::min(lower_degree(*n.lhs), lower_degree(*n.rhs));
    case Kind::Max:
      return std::max(lower_degree(*n.lhs), lower_degree(*n.rhs));
  }
  return -kInf;
}

double upper_degree(const Expression::Node& n) {
  switch (n.kind) {
    case Kind::Constant: return 0.0;
    case Kind::Var: return 1.0;
    case Kind::Neg: return upper_degree(*n.lhs);
    case Kind::Abs: return upper_degree(*n.lhs);
    case Kind::Exp: return boundedness(*n.lhs).above ? 0.0 : kInf;
    case Kind::Add: return std::max(upper_degree(*n.lhs), upper_degree(*n.rhs));
    case Kind::Sub: return std::max(upper_degree(*n.lhs), upper_degree(*n.rhs));
    case Kind::Mul: return upper_degree(*n.lhs) + upper_degree(*n.rhs);
    case Kind::Div: {
      const double a = upper_degree(*n.lhs), b = lower_degree(*n.rhs);
      if (a == kInf) return kInf;
      if (b == -kInf) return kInf;  // denominator may vanish at infinity
      return a - b;
    }
    case Kind::Pow:
      if (n.rhs->kind == Kind::Constant) {
        const double c = n.rhs->value;
        const double a = upper_degree(*n.lhs);
        if (c >= 0.0) return a == kInf ? kInf : a * c;
        const double l = lower_degree(*n.lhs);
        return l == -kInf ? kInf : l * c;
      }
      return kInf;
    case Kind::Min:
      if (nonneg_node(*n.lhs) && nonneg_node(*n.rhs)) {
        return std::min(upper_degree(*n.lhs), upper_degree(*n.rhs));
      }
      return std::max(upper_degree(*n.lhs), upper_degree(*n.rhs));
    case Kind::Max:
      return std::max(upper_degree(*n.lhs), upper_degree(*n.rhs));
  }
  return kInf;
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  Parser p(text);
  return Expression(p.run());
}

double Expression::eval(double x) const { return eval_node(*root_, x); }

std::string Expression::print() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

bool Expression::equals(const Expression& other) const {
  return equal_nodes(*root_, *other.root_);
}

double Expression::growth_degree() const { return upper_degree(*root_); }

double Expression::lower_growth_degree() const { return lower_degree(*root_); }

}  // namespace merg
