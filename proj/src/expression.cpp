// SPDX-License-Identifier: Apache-2.0
#include "evomax/expression.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <memory>

#include "evomax/error.hpp"

namespace evomax {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view src) : src_(src) {}

  Expression run() {
    skip_space();
    if (at_end()) throw ExpressionError(ErrorCode::SyntaxError, "empty expression", pos_);
    parse_expr();
    skip_space();
    if (!at_end()) {
      throw ExpressionError(ErrorCode::SyntaxError,
                            std::string("unexpected '") + src_[pos_] + "'", pos_);
    }
    out_.source_ = std::string(src_);
    bool has_variable = false;
    for (const auto& n : out_.nodes_) has_variable |= n.kind == Expression::Kind::Variable;
    if (!has_variable) {
      out_.constant_value_ = out_.evaluate(0.0);
      out_.constant_ = true;
    }
    return std::move(out_);
  }

 private:
  using Kind = Expression::Kind;

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }

  void skip_space() {
    while (!at_end() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                         src_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_space();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      throw ExpressionError(ErrorCode::SyntaxError,
                            std::string("expected '") + c + "'", pos_);
    }
  }

  int add(Expression::Node node) {
    out_.nodes_.push_back(node);
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int binary(Kind kind, int lhs, int rhs) { return add({kind, 0.0, {}, lhs, rhs}); }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Kind::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = binary(Kind::Subtract, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Kind::Multiply, lhs, parse_factor());
      } else if (accept('/')) {
        lhs = binary(Kind::Divide, lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  int parse_factor() { return parse_unary(); }

  int parse_unary() {
    if (accept('-')) {
      const int operand = parse_unary();
      return add({Kind::Negate, 0.0, {}, operand, -1});
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (accept('^')) return binary(Kind::Power, base, parse_factor());
    return base;
  }

  int parse_primary() {
    skip_space();
    if (at_end()) throw ExpressionError(ErrorCode::SyntaxError, "unexpected end of input", pos_);
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (accept('(')) {
      const int inner = parse_expr();
      expect(')');
      return inner;
    }
    throw ExpressionError(ErrorCode::SyntaxError, std::string("unexpected '") + c + "'", pos_);
  }

  int parse_number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[end])) ||
                                 src_[end] == '.')) {
      ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t exp_end = end + 1;
      if (exp_end < src_.size() && (src_[exp_end] == '+' || src_[exp_end] == '-')) ++exp_end;
      if (exp_end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[exp_end]))) {
        while (exp_end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[exp_end]))) {
          ++exp_end;
        }
        end = exp_end;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + end, value);
    if (ec != std::errc() || ptr != src_.data() + end || !std::isfinite(value)) {
      throw ExpressionError(ErrorCode::SyntaxError, "malformed number", start);
    }
    pos_ = end;
    return add({Kind::Number, value, {}, -1, -1});
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);
    skip_space();
    if (peek() == '(') {
      static constexpr std::array<std::pair<std::string_view, Expression::Function>, 6> table{{
          {"sin", Expression::Function::Sin},
          {"cos", Expression::Function::Cos},
          {"exp", Expression::Function::Exp},
          {"tanh", Expression::Function::Tanh},
          {"sqrt", Expression::Function::Sqrt},
          {"abs", Expression::Function::Abs},
      }};
      for (const auto& [fname, fn] : table) {
        if (fname == name) {
          ++pos_;
          const int arg = parse_expr();
          expect(')');
          return add({Kind::Call, 0.0, fn, arg, -1});
        }
      }
      throw ExpressionError(ErrorCode::UnknownFunction,
                            "unknown function '" + std::string(name) + "'", start);
    }
    if (name == "u") return add({Kind::Variable, 0.0, {}, -1, -1});
    throw ExpressionError(ErrorCode::UnknownVariable,
                          "unknown variable '" + std::string(name) + "'", start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Expression out_;
};

Expression Expression::parse(std::string_view source) { return ExpressionParser(source).run(); }

double Expression::evaluate(double u) const {
  if (constant_) return constant_value_;
  constexpr std::size_t kInline = 64;
  std::array<double, kInline> inline_buffer;
  std::unique_ptr<double[]> heap;
  double* v = inline_buffer.data();
  if (nodes_.size() > kInline) {
    heap = std::make_unique<double[]>(nodes_.size());
    v = heap.get();
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case Kind::Number: v[i] = n.number; break;
      case Kind::Variable: v[i] = u; break;
      case Kind::Negate: v[i] = -v[n.lhs]; break;
      case Kind::Add: v[i] = v[n.lhs] + v[n.rhs]; break;
      case Kind::Subtract: v[i] = v[n.lhs] - v[n.rhs]; break;
      case Kind::Multiply: v[i] = v[n.lhs] * v[n.rhs]; break;
      case Kind::Divide: v[i] = v[n.lhs] / v[n.rhs]; break;
      case Kind::Power: v[i] = std::pow(v[n.lhs], v[n.rhs]); break;
      case Kind::Call: {
        const double a = v[n.lhs];
        switch (n.function) {
          case Function::Sin: v[i] = std::sin(a); break;
          case Function::Cos: v[i] = std::cos(a); break;
          case Function::Exp: v[i] = std::exp(a); break;
          case Function::Tanh: v[i] = std::tanh(a); break;
          case Function::Sqrt: v[i] = std::sqrt(a); break;
          case Function::Abs: v[i] = std::abs(a); break;
        }
        break;
      }
    }
  }
  return v[nodes_.size() - 1];
}

namespace {

std::string render(const std::vector<Expression::Node>& nodes, int i) {
  using Kind = Expression::Kind;
  const auto& n = nodes[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case Kind::Number: {
      std::array<char, 64> buf;
      const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), n.number);
      return std::string(buf.data(), r.ptr);
    }
    case Kind::Variable: return "u";
    case Kind::Negate: return "(-" + render(nodes, n.lhs) + ")";
    case Kind::Call: {
      static constexpr const char* names[] = {"sin", "cos", "exp", "tanh", "sqrt", "abs"};
      return std::string(names[static_cast<int>(n.function)]) + "(" + render(nodes, n.lhs) + ")";
    }
    default: break;
  }
  const char* op = n.kind == Kind::Add        ? "+"
                   : n.kind == Kind::Subtract ? "-"
                   : n.kind == Kind::Multiply ? "*"
                   : n.kind == Kind::Divide   ? "/"
                                              : "^";
  return "(" + render(nodes, n.lhs) + op + render(nodes, n.rhs) + ")";
}

}  // namespace

std::string Expression::to_string() const {
  return render(nodes_, static_cast<int>(nodes_.size()) - 1);
}

Expression parse_expression(std::string_view source) { return Expression::parse(source); }

double eval_expression(const Expression& expression, double u) { return expression.evaluate(u); }

ScalarFunction to_function(Expression expression) {
  auto shared = std::make_shared<const Expression>(std::move(expression));
  return [shared](double u) { return shared->evaluate(u); };
}

}  // namespace evomax
