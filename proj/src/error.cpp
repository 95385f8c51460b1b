// SPDX-License-Identifier: Apache-2.0
#include "evomax/error.hpp"

namespace evomax {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RowSumViolation: return "RowSumViolation";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DomainEscape: return "DomainEscape";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NonFiniteSource: return "NonFiniteSource";
    case ErrorCode::SolvabilityViolation: return "SolvabilityViolation";
    case ErrorCode::ConsistencyViolation: return "ConsistencyViolation";
    case ErrorCode::ProjectionViolation: return "ProjectionViolation";
    case ErrorCode::TailTruncationTooCoarse: return "TailTruncationTooCoarse";
    case ErrorCode::OrderUnavailable: return "OrderUnavailable";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::InsufficientResolution: return "InsufficientResolution";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SyntaxError:
    case ErrorCode::UnknownFunction:
    case ErrorCode::UnknownVariable:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::RowSumViolation:
    case ErrorCode::NegativeRate:
    case ErrorCode::Reducible:
      return true;
    default:
      return false;
  }
}

}  // namespace evomax
