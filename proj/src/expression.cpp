#include "shearlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace shearlab {

enum class Op {
  num, x, y, add, sub, mul, div, pow, neg,
  sin, cos, tan, exp, log, sqrt, abs, sinh, cosh, tanh, atan, min, max
};

struct Expression::Node {
  Op op;
  double value = 0.0;
  int a = -1;
  int b = -1;
};

namespace {

struct FnEntry {
  const char* name;
  Op op;
  int arity;
};

constexpr FnEntry kFunctions[] = {
    {"sin", Op::sin, 1},   {"cos", Op::cos, 1},   {"tan", Op::tan, 1},   {"exp", Op::exp, 1},
    {"log", Op::log, 1},   {"sqrt", Op::sqrt, 1}, {"abs", Op::abs, 1},   {"sinh", Op::sinh, 1},
    {"cosh", Op::cosh, 1}, {"tanh", Op::tanh, 1}, {"atan", Op::atan, 1}, {"pow", Op::pow, 2},
    {"min", Op::min, 2},   {"max", Op::max, 2},
};

class Parser {
 public:
  Parser(const std::string& s, std::vector<Expression::Node>& out) : s_(s), nodes_(out) {}

  int parse() {
    const int r = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExpressionError("expression \"" + s_ + "\": " + msg + " at offset " +
                          std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  int push(Op op, int a = -1, int b = -1, double v = 0.0) {
    nodes_.push_back({op, v, a, b});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int expr() {
    int l = term();
    for (;;) {
      if (accept('+')) l = push(Op::add, l, term());
      else if (accept('-')) l = push(Op::sub, l, term());
      else return l;
    }
  }
  int term() {
    int l = unary();
    for (;;) {
      if (accept('*')) l = push(Op::mul, l, unary());
      else if (accept('/')) l = push(Op::div, l, unary());
      else return l;
    }
  }
  int unary() {
    if (accept('-')) return push(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }
  int power() {
    const int base = primary();
    if (accept('^')) return push(Op::pow, base, unary());
    return base;
  }
  int primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      const int r = expr();
      if (!accept(')')) fail("expected ')'");
      return r;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return push(Op::num, -1, -1, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "x") return push(Op::x);
      if (id == "y") return push(Op::y);
      if (id == "pi") return push(Op::num, -1, -1, M_PI);
      if (id == "e") return push(Op::num, -1, -1, M_E);
      for (const auto& f : kFunctions) {
        if (id != f.name) continue;
        if (!accept('(')) fail("expected '(' after " + id);
        const int a = expr();
        int b = -1;
        if (f.arity == 2) {
          if (!accept(',')) fail(id + " takes two arguments");
          b = expr();
        }
        if (!accept(')')) fail("expected ')'");
        return push(f.op, a, b);
      }
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::vector<Expression::Node>& nodes_;
  std::size_t pos_ = 0;
};

Dual chain(const Dual& a, double v, double d) { return {v, d * a.dx, d * a.dy}; }

double eval_d(const std::vector<Expression::Node>& n, int i, double x, double y) {
  const auto& k = n[i];
  auto A = [&] { return eval_d(n, k.a, x, y); };
  auto B = [&] { return eval_d(n, k.b, x, y); };
  switch (k.op) {
    case Op::num: return k.value;
    case Op::x: return x;
    case Op::y: return y;
    case Op::add: return A() + B();
    case Op::sub: return A() - B();
    case Op::mul: return A() * B();
    case Op::div: return A() / B();
    case Op::pow: return std::pow(A(), B());
    case Op::neg: return -A();
    case Op::sin: return std::sin(A());
    case Op::cos: return std::cos(A());
    case Op::tan: return std::tan(A());
    case Op::exp: return std::exp(A());
    case Op::log: return std::log(A());
    case Op::sqrt: return std::sqrt(A());
    case Op::abs: return std::abs(A());
    case Op::sinh: return std::sinh(A());
    case Op::cosh: return std::cosh(A());
    case Op::tanh: return std::tanh(A());
    case Op::atan: return std::atan(A());
    case Op::min: return std::min(A(), B());
    case Op::max: return std::max(A(), B());
  }
  return 0.0;
}

Dual eval_dual(const std::vector<Expression::Node>& n, int i, double x, double y) {
  const auto& k = n[i];
  switch (k.op) {
    case Op::num: return {k.value, 0.0, 0.0};
    case Op::x: return {x, 1.0, 0.0};
    case Op::y: return {y, 0.0, 1.0};
    default: break;
  }
  const Dual a = eval_dual(n, k.a, x, y);
  Dual b;
  if (k.b >= 0) b = eval_dual(n, k.b, x, y);
  switch (k.op) {
    case Op::add: return {a.v + b.v, a.dx + b.dx, a.dy + b.dy};
    case Op::sub: return {a.v - b.v, a.dx - b.dx, a.dy - b.dy};
    case Op::mul: return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy};
    case Op::div: {
      const double q = a.v / b.v;
      return {q, (a.dx - q * b.dx) / b.v, (a.dy - q * b.dy) / b.v};
    }
    case Op::pow: {
      const double v = std::pow(a.v, b.v);
      if (b.dx == 0.0 && b.dy == 0.0) {
        const double d = b.v == 0.0 ? 0.0 : b.v * std::pow(a.v, b.v - 1.0);
        return chain(a, v, d);
      }
      const double la = std::log(a.v);
      return {v, v * (b.dx * la + b.v * a.dx / a.v), v * (b.dy * la + b.v * a.dy / a.v)};
    }
    case Op::neg: return {-a.v, -a.dx, -a.dy};
    case Op::sin: return chain(a, std::sin(a.v), std::cos(a.v));
    case Op::cos: return chain(a, std::cos(a.v), -std::sin(a.v));
    case Op::tan: {
      const double t = std::tan(a.v);
      return chain(a, t, 1.0 + t * t);
    }
    case Op::exp: {
      const double e = std::exp(a.v);
      return chain(a, e, e);
    }
    case Op::log: return chain(a, std::log(a.v), 1.0 / a.v);
    case Op::sqrt: {
      const double r = std::sqrt(a.v);
      return chain(a, r, 0.5 / r);
    }
    case Op::abs: return chain(a, std::abs(a.v), a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0));
    case Op::sinh: return chain(a, std::sinh(a.v), std::cosh(a.v));
    case Op::cosh: return chain(a, std::cosh(a.v), std::sinh(a.v));
    case Op::tanh: {
      const double t = std::tanh(a.v);
      return chain(a, t, 1.0 - t * t);
    }
    case Op::atan: return chain(a, std::atan(a.v), 1.0 / (1.0 + a.v * a.v));
    case Op::min: return a.v <= b.v ? a : b;
    case Op::max: return a.v >= b.v ? a : b;
    default: break;
  }
  return {};
}

}  // namespace

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::string source, std::shared_ptr<const std::vector<Node>> nodes,
                       int root)
    : source_(std::move(source)), nodes_(std::move(nodes)), root_(root) {}

Expression Expression::parse(const std::string& source) {
  auto nodes = std::make_shared<std::vector<Node>>();
  Parser parser(source, *nodes);
  const int root = parser.parse();
  return Expression(source, std::move(nodes), root);
}

Expression Expression::constant(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  auto nodes = std::make_shared<std::vector<Node>>();
  nodes->push_back({Op::num, value, -1, -1});
  return Expression(buf, std::move(nodes), 0);
}

double Expression::operator()(double x, double y) const { return eval_d(*nodes_, root_, x, y); }

Dual Expression::dual(double x, double y) const { return eval_dual(*nodes_, root_, x, y); }

}  // namespace shearlab
