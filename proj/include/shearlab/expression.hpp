#pragma once

// Arithmetic expressions over (x, y) for configuration data, evaluated either as
// plain doubles or as forward-mode duals carrying the gradient.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace shearlab {

struct ExpressionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Value and first partial derivatives in x and y.
struct Dual {
  double v = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

/// Grammar: + - * / ^ (right associative), unary minus, parentheses, numbers,
/// variables x y, constants pi e, and the functions sin cos tan exp log sqrt abs
/// sinh cosh tanh atan pow(a,b) min(a,b) max(a,b).
class Expression {
 public:
  Expression();  // the constant 0
  static Expression parse(const std::string& source);
  static Expression constant(double value);

  double operator()(double x, double y) const;
  Dual dual(double x, double y) const;
  const std::string& source() const { return source_; }
  bool operator==(const Expression& o) const { return source_ == o.source_; }

  struct Node;

 private:
  Expression(std::string source, std::shared_ptr<const std::vector<Node>> nodes, int root);
  std::string source_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = 0;
};

}  // namespace shearlab
