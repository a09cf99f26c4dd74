#include <doctest.h>

#include <cmath>
#include <random>

#include "merg/expression.hpp"

using merg::Expression;

TEST_CASE("basic evaluation") {
  CHECK(Expression::parse("1 + 2*3").eval(0.0) == doctest::Approx(7.0));
  CHECK(Expression::parse("x*x").eval(3.0) == doctest::Approx(9.0));
  CHECK(Expression::parse("abs(-x)").eval(-2.5) == doctest::Approx(2.5));
  CHECK(Expression::parse("exp(-abs(x))").eval(1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(Expression::parse("min(x, 2)").eval(5.0) == doctest::Approx(2.0));
  CHECK(Expression::parse("max(x, 2)").eval(5.0) == doctest::Approx(5.0));
  CHECK(Expression::parse("pow(x, 3)").eval(2.0) == doctest::Approx(8.0));
  CHECK(Expression::parse("x^2 + 1").eval(3.0) == doctest::Approx(10.0));
  CHECK(Expression::parse("2e-1 * x").eval(10.0) == doctest::Approx(2.0));
}

TEST_CASE("hand-evaluated observable expression") {
  // x*x/(1+abs(x)) at x=3: 9/4
  CHECK(Expression::parse("x*x/(1+abs(x))").eval(3.0) == doctest::Approx(2.25));
}

TEST_CASE("division by zero is an evaluation error") {
  const auto e = Expression::parse("1/x");
  CHECK_THROWS_AS(e.eval(0.0), merg::ExprEvalError);
  CHECK(e.eval(2.0) == doctest::Approx(0.5));
}

TEST_CASE("parse errors carry caret positions") {
  try {
    Expression::parse("x + foo(x)");
    FAIL("expected parse error");
  } catch (const merg::ExprParseError& err) {
    CHECK(err.position == 4);
  }
  CHECK_THROWS_AS(Expression::parse("x + "), merg::ExprParseError);
  CHECK_THROWS_AS(Expression::parse("min(x)"), merg::ExprParseError);
  CHECK_THROWS_AS(Expression::parse("(x"), merg::ExprParseError);
  CHECK_THROWS_AS(Expression::parse("x) "), merg::ExprParseError);
}

TEST_CASE("print/parse round-trip is the identity on printed forms") {
  const char* samples[] = {
      "x*x",
      "x*x/(1+abs(x))",
      "min(max(x, 0), 10) + exp(-abs(x))",
      "pow(abs(x), 1.5) - x/3 + 2.25e2",
      "-x + (-(x*x))",
      "x^2 ^ 3",
  };
  for (const char* s : samples) {
    const auto e = Expression::parse(s);
    const std::string printed = e.print();
    const auto reparsed = Expression::parse(printed);
    CHECK(reparsed.equals(e));
    CHECK(reparsed.print() == printed);

    // printed form evaluates identically
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 50; ++i) {
      const double x = u(rng);
      double a, b;
      try {
        a = e.eval(x);
        b = reparsed.eval(x);
      } catch (const merg::ExprEvalError&) {
        continue;
      }
      CHECK(a == b);
    }
  }
}

TEST_CASE("growth degrees") {
  CHECK(Expression::parse("x*x").growth_degree() == doctest::Approx(2.0));
  CHECK(Expression::parse("x*x/(1+abs(x))").growth_degree() == doctest::Approx(1.0));
  CHECK(std::isinf(Expression::parse("exp(x)").growth_degree()));
  CHECK(Expression::parse("exp(-abs(x))").growth_degree() <= 1.0);
  CHECK(Expression::parse("5").growth_degree() == doctest::Approx(0.0));
  CHECK(Expression::parse("pow(abs(x), 3)").growth_degree() == doctest::Approx(3.0));

  // coercivity certificates
  CHECK(Expression::parse("x*x").lower_growth_degree() > 0.0);
  CHECK(Expression::parse("abs(x) + 1").lower_growth_degree() > 0.0);
  CHECK(Expression::parse("min(x*x, abs(x))").lower_growth_degree() > 0.0);
}
