#include "vishape/obstacle.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <vector>

namespace vishape {

namespace {

// --- tiny symbolic expression engine for obstacle definitions ---

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Exp, Neg } kind;
  double cval = 0;
  int var = 0;       // 0 -> x1, 1 -> x2
  int exponent = 1;  // for Pow
  NodePtr a, b;
};

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Const;
  n->cval = v;
  return n;
}

NodePtr make_var(int i) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Var;
  n->var = i;
  return n;
}

NodePtr make(Node::Kind k, NodePtr a, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_pow(NodePtr a, int e) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Pow;
  n->a = std::move(a);
  n->exponent = e;
  return n;
}

double eval(const Node& n, const Vec2& x) {
  switch (n.kind) {
    case Node::Kind::Const: return n.cval;
    case Node::Kind::Var: return n.var == 0 ? x.x() : x.y();
    case Node::Kind::Add: return eval(*n.a, x) + eval(*n.b, x);
    case Node::Kind::Sub: return eval(*n.a, x) - eval(*n.b, x);
    case Node::Kind::Mul: return eval(*n.a, x) * eval(*n.b, x);
    case Node::Kind::Div: return eval(*n.a, x) / eval(*n.b, x);
    case Node::Kind::Pow: return std::pow(eval(*n.a, x), n.exponent);
    case Node::Kind::Exp: return std::exp(eval(*n.a, x));
    case Node::Kind::Neg: return -eval(*n.a, x);
  }
  return 0;
}

NodePtr diff(const NodePtr& n, int var) {
  switch (n->kind) {
    case Node::Kind::Const: return make_const(0);
    case Node::Kind::Var: return make_const(n->var == var ? 1.0 : 0.0);
    case Node::Kind::Add: return make(Node::Kind::Add, diff(n->a, var), diff(n->b, var));
    case Node::Kind::Sub: return make(Node::Kind::Sub, diff(n->a, var), diff(n->b, var));
    case Node::Kind::Mul:
      return make(Node::Kind::Add, make(Node::Kind::Mul, diff(n->a, var), n->b),
                  make(Node::Kind::Mul, n->a, diff(n->b, var)));
    case Node::Kind::Div:
      // (a/b)' = a'/b - a b'/b^2
      return make(Node::Kind::Sub, make(Node::Kind::Div, diff(n->a, var), n->b),
                  make(Node::Kind::Div, make(Node::Kind::Mul, n->a, diff(n->b, var)),
                       make_pow(n->b, 2)));
    case Node::Kind::Pow:
      if (n->exponent == 0) return make_const(0);
      return make(Node::Kind::Mul,
                  make(Node::Kind::Mul, make_const(n->exponent), make_pow(n->a, n->exponent - 1)),
                  diff(n->a, var));
    case Node::Kind::Exp:
      return make(Node::Kind::Mul, make(Node::Kind::Exp, n->a), diff(n->a, var));
    case Node::Kind::Neg: return make(Node::Kind::Neg, diff(n->a, var));
  }
  return make_const(0);
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return e;
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) {
    throw ConfigError("obstacle expression error at position " + std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool peek_word(const std::string& w) {
    skip_ws();
    return s_.compare(pos_, w.size(), w) == 0;
  }

  NodePtr expr() {
    NodePtr e = term();
    while (true) {
      if (consume('+'))
        e = make(Node::Kind::Add, e, term());
      else if (consume('-'))
        e = make(Node::Kind::Sub, e, term());
      else
        return e;
    }
  }

  NodePtr term() {
    NodePtr e = unary();
    while (true) {
      if (consume('*'))
        e = make(Node::Kind::Mul, e, unary());
      else if (consume('/'))
        e = make(Node::Kind::Div, e, unary());
      else
        return e;
    }
  }

  NodePtr unary() {
    if (consume('-')) return make(Node::Kind::Neg, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (consume('^')) {
      skip_ws();
      size_t start = pos_;
      bool negative = consume('-');
      skip_ws();
      size_t digits = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits) {
        pos_ = start;
        fail("integer exponent expected");
      }
      int e = std::stoi(s_.substr(digits, pos_ - digits));
      return make_pow(base, negative ? -e : e);
    }
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    if (peek_word("exp")) {
      pos_ += 3;
      if (!consume('(')) fail("'(' expected after exp");
      NodePtr inner = expr();
      if (!consume(')')) fail("')' expected");
      return make(Node::Kind::Exp, inner);
    }
    if (peek_word("x1")) {
      pos_ += 2;
      return make_var(0);
    }
    if (peek_word("x2")) {
      pos_ += 2;
      return make_var(1);
    }
    if (consume('(')) {
      NodePtr inner = expr();
      if (!consume(')')) fail("')' expected");
      return inner;
    }
    char* end = nullptr;
    const double v = std::strtod(s_.c_str() + pos_, &end);
    if (end == s_.c_str() + pos_) fail("number expected");
    pos_ = end - s_.c_str();
    return make_const(v);
  }
};

}  // namespace

Obstacle Obstacle::constant(double c) {
  Obstacle o;
  o.value = [c](const Vec2&) { return c; };
  o.gradient = [](const Vec2&) { return Vec2::Zero().eval(); };
  o.laplacian = [](const Vec2&) { return 0.0; };
  return o;
}

Obstacle Obstacle::phi1() { return constant(0.5); }

Obstacle Obstacle::phi2() {
  Obstacle o;
  o.value = [](const Vec2& x) { return 5.0 * std::exp(-x.x() - 1.0); };
  o.gradient = [](const Vec2& x) { return Vec2(-5.0 * std::exp(-x.x() - 1.0), 0.0); };
  o.laplacian = [](const Vec2& x) { return 5.0 * std::exp(-x.x() - 1.0); };
  return o;
}

Obstacle Obstacle::from_expression(const std::string& expr) {
  NodePtr f = Parser(expr).parse();
  NodePtr fx = diff(f, 0), fy = diff(f, 1);
  NodePtr lap = make(Node::Kind::Add, diff(fx, 0), diff(fy, 1));
  Obstacle o;
  o.value = [f](const Vec2& x) { return eval(*f, x); };
  o.gradient = [fx, fy](const Vec2& x) { return Vec2(eval(*fx, x), eval(*fy, x)); };
  o.laplacian = [lap](const Vec2& x) { return eval(*lap, x); };
  return o;
}

Obstacle Obstacle::named(const std::string& name) {
  if (name == "phi1") return phi1();
  if (name == "phi2") return phi2();
  return from_expression(name);
}

}  // namespace vishape
