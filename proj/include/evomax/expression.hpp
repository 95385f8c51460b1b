// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "evomax/function_space.hpp"

namespace evomax {

/// Scalar expression in the single variable `u`.
///
/// Grammar (whitespace insignificant, no unary plus):
///
///     expr    := term (('+' | '-') term)*
///     term    := factor (('*' | '/') factor)*
///     factor  := unary
///     unary   := '-' unary | power
///     power   := primary ('^' factor)?
///     primary := NUMBER | 'u' | FUNC '(' expr ')' | '(' expr ')'
///     FUNC    := sin | cos | exp | tanh | sqrt | abs
///
/// so `^` is right-associative and binds tighter than unary minus: -u^2 = -(u^2).
class Expression {
 public:
  enum class Kind { Number, Variable, Negate, Add, Subtract, Multiply, Divide, Power, Call };
  enum class Function { Sin, Cos, Exp, Tanh, Sqrt, Abs };

  struct Node {
    Kind kind;
    double number = 0.0;
    Function function = Function::Sin;
    int lhs = -1;
    int rhs = -1;
  };

  /// Throws ExpressionError (SyntaxError, UnknownFunction, UnknownVariable).
  static Expression parse(std::string_view source);

  double evaluate(double u) const;
  double operator()(double u) const { return evaluate(u); }

  /// Fully parenthesised rendering that parses back to the same tree.
  std::string to_string() const;

  const std::string& source() const noexcept { return source_; }
  bool is_constant() const noexcept { return constant_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

 private:
  friend class ExpressionParser;

  std::vector<Node> nodes_;  // children always precede their parent
  std::string source_;
  bool constant_ = false;
  double constant_value_ = 0.0;
};

Expression parse_expression(std::string_view source);
double eval_expression(const Expression& expression, double u);
ScalarFunction to_function(Expression expression);

}  // namespace evomax
