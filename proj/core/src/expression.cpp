#include "sqmle/expression.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

#include "sqmle/errors.hpp"

namespace sqmle {

enum class Op { constant, var_x, param, add, sub, mul, div, neg, exp, log, sin, cos, pow };

struct Expr::Node {
  Op op = Op::constant;
  double value = 0.0;
  ParamGroup group = ParamGroup::alpha;
  int index = 0;  // 0-based
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::constant;
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }

NodePtr make(Op op, NodePtr a, NodePtr b = nullptr) {
  // Constant folding and the usual 0/1 identities.
  if (a && a->op == Op::constant && (!b || b->op == Op::constant)) {
    const double x = a->value;
    const double y = b ? b->value : 0.0;
    switch (op) {
      case Op::add: return make_const(x + y);
      case Op::sub: return make_const(x - y);
      case Op::mul: return make_const(x * y);
      case Op::div: if (y != 0.0) return make_const(x / y); break;
      case Op::neg: return make_const(-x);
      case Op::exp: return make_const(std::exp(x));
      case Op::sin: return make_const(std::sin(x));
      case Op::cos: return make_const(std::cos(x));
      case Op::log: if (x > 0.0) return make_const(std::log(x)); break;
      case Op::pow: return make_const(std::pow(x, y));
      default: break;
    }
  }
  switch (op) {
    case Op::add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make(Op::neg, b);
      break;
    case Op::mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::div:
      if (is_const(a, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::neg:
      if (a->op == Op::neg) return a->a;
      break;
    case Op::pow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return make_const(1.0);
      break;
    default: break;
  }
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr parse() {
    auto e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression error at position " << pos_ << ": " << msg << " in '" << s_ << "'";
    throw UsageError(os.str());
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
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::add, lhs, term());
      else if (accept('-')) lhs = make(Op::sub, lhs, term());
      else return lhs;
    }
  }
  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Op::mul, lhs, unary());
      else if (accept('/')) lhs = make(Op::div, lhs, unary());
      else return lhs;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    auto base = primary();
    if (accept('^')) return make(Op::pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected character");
  }
  NodePtr number() {
    const std::string rest(s_.substr(pos_));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ += used;
    return make_const(v);
  }
  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string id(s_.substr(start, pos_ - start));
    if (id == "x") {
      auto n = std::make_shared<Expr::Node>();
      n->op = Op::var_x;
      return n;
    }
    for (auto [prefix, group] : {std::pair{"alpha", ParamGroup::alpha}, std::pair{"gamma", ParamGroup::gamma}}) {
      const std::string p(prefix);
      if (id.rfind(p, 0) == 0 && id.size() > p.size()) {
        const std::string digits = id.substr(p.size());
        if (digits.find_first_not_of("0123456789") != std::string::npos) break;
        const int idx = std::stoi(digits);
        if (idx < 1) fail("parameter indices are 1-based");
        auto n = std::make_shared<Expr::Node>();
        n->op = Op::param;
        n->group = group;
        n->index = idx - 1;
        return n;
      }
    }
    Op op;
    if (id == "exp") op = Op::exp;
    else if (id == "log") op = Op::log;
    else if (id == "sin") op = Op::sin;
    else if (id == "cos") op = Op::cos;
    else if (id == "pow") op = Op::pow;
    else {
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    expect('(');
    auto arg = expr();
    if (op == Op::pow) {
      expect(',');
      auto ex = expr();
      expect(')');
      return make(Op::pow, arg, ex);
    }
    expect(')');
    return make(op, arg);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

double eval_node(const Expr::Node& n, double x, std::span<const double> al, std::span<const double> ga) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::var_x: return x;
    case Op::param: {
      const auto& v = n.group == ParamGroup::alpha ? al : ga;
      if (static_cast<std::size_t>(n.index) >= v.size()) {
        throw UsageError("expression references a parameter beyond the model dimension");
      }
      return v[n.index];
    }
    case Op::add: return eval_node(*n.a, x, al, ga) + eval_node(*n.b, x, al, ga);
    case Op::sub: return eval_node(*n.a, x, al, ga) - eval_node(*n.b, x, al, ga);
    case Op::mul: return eval_node(*n.a, x, al, ga) * eval_node(*n.b, x, al, ga);
    case Op::div: return eval_node(*n.a, x, al, ga) / eval_node(*n.b, x, al, ga);
    case Op::neg: return -eval_node(*n.a, x, al, ga);
    case Op::exp: return std::exp(eval_node(*n.a, x, al, ga));
    case Op::log: return std::log(eval_node(*n.a, x, al, ga));
    case Op::sin: return std::sin(eval_node(*n.a, x, al, ga));
    case Op::cos: return std::cos(eval_node(*n.a, x, al, ga));
    case Op::pow: return std::pow(eval_node(*n.a, x, al, ga), eval_node(*n.b, x, al, ga));
  }
  return 0.0;
}

bool depends_on(const NodePtr& n, ParamGroup g, int idx) {
  if (!n) return false;
  if (n->op == Op::param) return n->group == g && n->index == idx;
  return depends_on(n->a, g, idx) || depends_on(n->b, g, idx);
}

NodePtr diff(const NodePtr& n, ParamGroup g, int idx) {
  if (!depends_on(n, g, idx)) return make_const(0.0);
  const auto& a = n->a;
  const auto& b = n->b;
  switch (n->op) {
    case Op::param: return make_const(1.0);
    case Op::add: return make(Op::add, diff(a, g, idx), diff(b, g, idx));
    case Op::sub: return make(Op::sub, diff(a, g, idx), diff(b, g, idx));
    case Op::mul:
      return make(Op::add, make(Op::mul, diff(a, g, idx), b), make(Op::mul, a, diff(b, g, idx)));
    case Op::div:
      // (a' b - a b') / b^2
      return make(Op::div,
                  make(Op::sub, make(Op::mul, diff(a, g, idx), b), make(Op::mul, a, diff(b, g, idx))),
                  make(Op::mul, b, b));
    case Op::neg: return make(Op::neg, diff(a, g, idx));
    case Op::exp: return make(Op::mul, n, diff(a, g, idx));
    case Op::log: return make(Op::div, diff(a, g, idx), a);
    case Op::sin: return make(Op::mul, make(Op::cos, a), diff(a, g, idx));
    case Op::cos: return make(Op::neg, make(Op::mul, make(Op::sin, a), diff(a, g, idx)));
    case Op::pow: {
      if (!depends_on(b, g, idx)) {
        // b a^(b-1) a'
        return make(Op::mul, make(Op::mul, b, make(Op::pow, a, make(Op::sub, b, make_const(1.0)))),
                    diff(a, g, idx));
      }
      // a^b (b' log a + b a'/a)
      return make(Op::mul, n,
                  make(Op::add, make(Op::mul, diff(b, g, idx), make(Op::log, a)),
                       make(Op::div, make(Op::mul, b, diff(a, g, idx)), a)));
    }
    default: return make_const(0.0);
  }
}

int max_index_node(const NodePtr& n, ParamGroup g) {
  if (!n) return 0;
  if (n->op == Op::param) return n->group == g ? n->index + 1 : 0;
  return std::max(max_index_node(n->a, g), max_index_node(n->b, g));
}

void print(const NodePtr& n, std::ostream& os) {
  switch (n->op) {
    case Op::constant: os << n->value; return;
    case Op::var_x: os << 'x'; return;
    case Op::param: os << (n->group == ParamGroup::alpha ? "alpha" : "gamma") << n->index + 1; return;
    case Op::neg: os << "(-"; print(n->a, os); os << ')'; return;
    case Op::exp: case Op::log: case Op::sin: case Op::cos: {
      static const char* names[] = {"exp", "log", "sin", "cos"};
      os << names[static_cast<int>(n->op) - static_cast<int>(Op::exp)] << '(';
      print(n->a, os);
      os << ')';
      return;
    }
    case Op::pow: os << "pow("; print(n->a, os); os << ", "; print(n->b, os); os << ')'; return;
    default: break;
  }
  const char sym = n->op == Op::add ? '+' : n->op == Op::sub ? '-' : n->op == Op::mul ? '*' : '/';
  os << '(';
  print(n->a, os);
  os << ' ' << sym << ' ';
  print(n->b, os);
  os << ')';
}

}  // namespace

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).parse()); }

Expr Expr::constant(double v) { return Expr(make_const(v)); }

double Expr::eval(double x, std::span<const double> alpha, std::span<const double> gamma) const {
  return eval_node(*root_, x, alpha, gamma);
}

Expr Expr::derivative(ParamGroup group, int index) const { return Expr(diff(root_, group, index)); }

bool Expr::is_constant_zero() const { return is_const(root_, 0.0); }

int Expr::max_index(ParamGroup group) const { return max_index_node(root_, group); }

std::string Expr::to_string() const {
  std::ostringstream os;
  os.precision(17);
  print(root_, os);
  return os.str();
}

}  // namespace sqmle
