#include <doctest.h>

#include <evomax/error.hpp>
#include <evomax/expression.hpp>

#include <cmath>
#include <random>

using namespace evomax;

namespace {

double eval(const char* src, double u = 0.0) { return parse_expression(src).evaluate(u); }

ErrorCode code_of(const char* src) {
  try {
    parse_expression(src);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error for " << src);
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(eval("sin(u)", 0.0) == 0.0);
  CHECK(eval("2+3*4^2") == 50.0);
  CHECK(eval("2^3^2") == 512.0);
  CHECK(eval("-u^2", 3.0) == -9.0);
  CHECK(eval("exp(0)") == 1.0);
  CHECK(std::abs(eval("tanh(1)") - 0.7615941559557649) < 1e-15);
  CHECK(eval("8/4/2") == 1.0);
  CHECK(eval("2-3-4") == -5.0);
  CHECK(eval("--2") == 2.0);
  CHECK(eval("2^-1") == 0.5);
  CHECK(eval("(1+2)*3") == 9.0);
  CHECK(eval(" 1.5e1 \t") == 15.0);
  CHECK(eval("sqrt(abs(-16))") == 4.0);
  CHECK(eval("cos(u)", 0.0) == 1.0);
}

TEST_CASE("syntax errors carry byte offsets") {
  CHECK(code_of("+1") == ErrorCode::SyntaxError);
  CHECK(code_of("") == ErrorCode::SyntaxError);
  CHECK(code_of("1+") == ErrorCode::SyntaxError);
  CHECK(code_of("(1") == ErrorCode::SyntaxError);
  CHECK(code_of("1 2") == ErrorCode::SyntaxError);
  CHECK(code_of("sin u") == ErrorCode::UnknownVariable);
  CHECK(code_of("foo(u)") == ErrorCode::UnknownFunction);
  CHECK(code_of("x") == ErrorCode::UnknownVariable);
  CHECK(code_of("1e400") == ErrorCode::SyntaxError);
  try {
    parse_expression("1 + * 2");
  } catch (const ExpressionError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("constant expressions") {
  const auto e = parse_expression("-1");
  CHECK(e.is_constant());
  CHECK(e.evaluate(123.0) == -1.0);
  CHECK_FALSE(parse_expression("u*0").is_constant());
}

TEST_CASE("pretty print round trip") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pick(-3.0, 3.0);
  for (const char* src : {"sin(u)", "2+3*4^2", "-u^2", "2^3^2", "0.1*u-exp(-u^2/2)/3",
                          "tanh(u)*sqrt(abs(u))+cos(2*u)^2", "1/3+u", "--u"}) {
    const auto e = parse_expression(src);
    const auto back = parse_expression(e.to_string());
    CHECK(back.to_string() == e.to_string());
    for (int i = 0; i < 100; ++i) {
      const double u = pick(rng);
      const double a = e.evaluate(u);
      const double b = back.evaluate(u);
      CHECK((a == b || (std::isnan(a) && std::isnan(b))));
    }
  }
  CHECK(parse_expression("-u^2").to_string() == "(-(u^2))");
}

TEST_CASE("to_function shares the parsed tree") {
  const auto f = to_function(parse_expression("u*u+1"));
  CHECK(f(2.0) == 5.0);
}
