#include "mcm/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace mcm {

struct Expression::Node {
  enum class Op { Number, VarX, VarY, VarR, Neg, Add, Sub, Mul, Div, Pow, Call };
  Op op = Op::Number;
  double number = 0.0;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(const Point& p) const {
    switch (op) {
      case Op::Number: return number;
      case Op::VarX: return p[0];
      case Op::VarY: return p[1];
      case Op::VarR: return std::hypot(p[0], p[1]);
      case Op::Neg: return -args[0]->eval(p);
      case Op::Add: return args[0]->eval(p) + args[1]->eval(p);
      case Op::Sub: return args[0]->eval(p) - args[1]->eval(p);
      case Op::Mul: return args[0]->eval(p) * args[1]->eval(p);
      case Op::Div: return args[0]->eval(p) / args[1]->eval(p);
      case Op::Pow: return std::pow(args[0]->eval(p), args[1]->eval(p));
      case Op::Call: return call(p);
    }
    return 0.0;
  }

  double call(const Point& p) const {
    const double a = args[0]->eval(p);
    if (fn == "sqrt") return std::sqrt(a);
    if (fn == "exp") return std::exp(a);
    if (fn == "log") return std::log(a);
    if (fn == "sin") return std::sin(a);
    if (fn == "cos") return std::cos(a);
    if (fn == "tan") return std::tan(a);
    if (fn == "abs") return std::abs(a);
    const double b = args[1]->eval(p);
    if (fn == "pow") return std::pow(a, b);
    if (fn == "atan2") return std::atan2(a, b);
    if (fn == "min") return std::min(a, b);
    return std::max(a, b);
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->args = std::move(args);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ContractError("expression '" + s_ + "': " + what + " at offset " + std::to_string(pos_));
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

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::Add, {lhs, term()});
      else if (accept('-')) lhs = make(Op::Sub, {lhs, term()});
      else return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Op::Mul, {lhs, unary()});
      else if (accept('/')) lhs = make(Op::Div, {lhs, unary()});
      else return lhs;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Op::Pow, {base, unary()});  // right associative
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (accept('(')) {
      NodePtr e = expression();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected character");
  }
  NodePtr number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Expression::Node>();
    n->number = v;
    return n;
  }
  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    if (id == "x" || id == "x1") return make(Op::VarX);
    if (id == "y" || id == "x2") return make(Op::VarY);
    if (id == "r") return make(Op::VarR);
    if (id == "pi" || id == "e") {
      auto n = std::make_shared<Expression::Node>();
      n->number = id == "pi" ? std::numbers::pi : std::numbers::e;
      return n;
    }
    static const std::vector<std::string> unary_fns{"sqrt", "exp", "log", "sin", "cos", "tan", "abs"};
    static const std::vector<std::string> binary_fns{"pow", "atan2", "min", "max"};
    int arity = 0;
    for (const auto& f : unary_fns) arity = (f == id) ? 1 : arity;
    for (const auto& f : binary_fns) arity = (f == id) ? 2 : arity;
    if (arity == 0) fail("unknown identifier '" + id + "'");
    if (!accept('(')) fail("expected '(' after " + id);
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Call;
    n->fn = id;
    n->args.push_back(expression());
    if (arity == 2) {
      if (!accept(',')) fail("expected ','");
      n->args.push_back(expression());
    }
    if (!accept(')')) fail("expected ')'");
    return n;
  }
};

}  // namespace

Expression Expression::parse(const std::string& source) {
  Expression e;
  e.source_ = source;
  e.root_ = Parser(source).parse();
  return e;
}

double Expression::operator()(const Point& x) const { return root_->eval(x); }

}  // namespace mcm
