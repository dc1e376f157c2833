#include <gtest/gtest.h>

#include <cmath>

#include "shearlab/expression.hpp"

using shearlab::Expression;
using shearlab::ExpressionError;

TEST(Expression, Arithmetic) {
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2 * 3")(0, 0), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(0, 0), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(0, 0), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(1 - x) / y")(3.0, 4.0), -0.5);
  EXPECT_DOUBLE_EQ(Expression::parse("1e-3 * 2")(0, 0), 2e-3);
}

TEST(Expression, FunctionsAndConstants) {
  EXPECT_NEAR(Expression::parse("sin(pi*x)*cos(pi*y)")(0.5, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(Expression::parse("exp(1) - e")(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(Expression::parse("pow(x, 0.5) + abs(-y) + max(x, y) + min(x, y)")(4.0, 1.0), 8.0, 1e-15);
  EXPECT_NEAR(Expression::parse("atan(1)")(0, 0), M_PI / 4, 1e-15);
}

TEST(Expression, DualGradient) {
  const Expression f = Expression::parse("x^2*y + sin(x*y)");
  const double x = 0.3, y = 1.7;
  const auto d = f.dual(x, y);
  EXPECT_NEAR(d.v, x * x * y + std::sin(x * y), 1e-15);
  EXPECT_NEAR(d.dx, 2 * x * y + y * std::cos(x * y), 1e-14);
  EXPECT_NEAR(d.dy, x * x + x * std::cos(x * y), 1e-14);
}

TEST(Expression, Errors) {
  EXPECT_THROW(Expression::parse("1 +"), ExpressionError);
  EXPECT_THROW(Expression::parse("foo(x)"), ExpressionError);
  EXPECT_THROW(Expression::parse("(x"), ExpressionError);
  EXPECT_THROW(Expression::parse("z"), ExpressionError);
  EXPECT_THROW(Expression::parse(""), ExpressionError);
}

TEST(Expression, SourceEquality) {
  EXPECT_EQ(Expression::parse("x+1"), Expression::parse("x+1"));
  EXPECT_EQ(Expression()(1.0, 2.0), 0.0);
  EXPECT_EQ(Expression::parse(Expression().source())(0, 0), 0.0);
}
