// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evomax {

enum class ErrorCode {
  // generator / linear algebra
  RowSumViolation,
  NegativeRate,
  Reducible,
  SingularSystem,
  NegativeTime,
  NonPositiveLambda,
  // fields and grids
  NonFiniteValue,
  DomainEscape,
  TooFewSamples,
  GridMismatch,
  // expansion
  NonFiniteSource,
  SolvabilityViolation,
  ConsistencyViolation,
  ProjectionViolation,
  TailTruncationTooCoarse,
  OrderUnavailable,
  // oracles and validation
  CflViolation,
  InsufficientResolution,
  DegenerateFit,
  // input layer
  SyntaxError,
  UnknownFunction,
  UnknownVariable,
  ParseError,
  SchemaError,
  ValidationError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors caused by user input (configs, expressions, flags) rather
/// than by a numerical breakdown. The CLI maps these to exit code 2.
bool is_input_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Expression-level failure carrying the byte offset into the source text.
class ExpressionError : public Error {
 public:
  ExpressionError(ErrorCode code, const std::string& message, std::size_t offset)
      : Error(code, message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace evomax
