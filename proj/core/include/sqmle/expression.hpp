#pragma once

// A small arithmetic expression language for user-defined model
// coefficients, with symbolic differentiation in the parameters.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | param | func '(' expr (',' expr)? ')' | '(' expr ')'
//   param   := 'alpha' digits | 'gamma' digits      (1-based)
//   func    := exp | log | sin | cos | pow

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace sqmle {

enum class ParamGroup { alpha, gamma };

class Expr {
 public:
  struct Node;

  /// Throws UsageError naming the offending position.
  static Expr parse(std::string_view text);
  static Expr constant(double v);

  double eval(double x, std::span<const double> alpha, std::span<const double> gamma) const;

  /// d/d(param) of the expression, algebraically simplified.
  Expr derivative(ParamGroup group, int index) const;

  bool is_constant_zero() const;
  /// Largest 1-based index used for the group, 0 if none.
  int max_index(ParamGroup group) const;
  std::string to_string() const;

 private:
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace sqmle
