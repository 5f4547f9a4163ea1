#pragma once

#include <stdexcept>
#include <string>

namespace hierlogit {

// Exit-code categories shared by the C API and the CLI:
// 0 success, 2 usage, 3 data error, 4 numerical/convergence error.
enum class ErrorCategory : int {
  Usage = 2,
  Data = 3,
  Numeric = 4,
};

enum class ErrorCode {
  // usage / configuration
  InvalidConfig,
  MissingInput,
  // dataset
  MissingColumn,
  UnexpectedColumn,
  MalformedNumeric,
  DuplicateCrashId,
  UnknownLevel,
  UnclassifiableRecord,
  NegativeCount,
  EmptyGroup,
  ConstantColumn,
  // screening
  UnderdeterminedDesign,
  // model
  DimensionMismatch,
  NonBinaryResponse,
  NonPositiveVariance,
  // sampler
  NonFiniteLogPosterior,
  InsufficientDraws,
  ConvergenceFailed,
  // evaluation
  DegenerateDraws,
  TooFewTailSamples,
  MismatchedDataset,
  InsufficientModels,
  MissingFit,
  // synthlab
  RangeTooNarrow,
};

inline ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::MissingInput:
      return ErrorCategory::Usage;
    case ErrorCode::NonPositiveVariance:
    case ErrorCode::NonFiniteLogPosterior:
    case ErrorCode::ConvergenceFailed:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

inline const char* name_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnexpectedColumn: return "UnexpectedColumn";
    case ErrorCode::MalformedNumeric: return "MalformedNumeric";
    case ErrorCode::DuplicateCrashId: return "DuplicateCrashId";
    case ErrorCode::UnknownLevel: return "UnknownLevel";
    case ErrorCode::UnclassifiableRecord: return "UnclassifiableRecord";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::UnderdeterminedDesign: return "UnderdeterminedDesign";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonBinaryResponse: return "NonBinaryResponse";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::NonFiniteLogPosterior: return "NonFiniteLogPosterior";
    case ErrorCode::InsufficientDraws: return "InsufficientDraws";
    case ErrorCode::ConvergenceFailed: return "ConvergenceFailed";
    case ErrorCode::DegenerateDraws: return "DegenerateDraws";
    case ErrorCode::TooFewTailSamples: return "TooFewTailSamples";
    case ErrorCode::MismatchedDataset: return "MismatchedDataset";
    case ErrorCode::InsufficientModels: return "InsufficientModels";
    case ErrorCode::MissingFit: return "MissingFit";
    case ErrorCode::RangeTooNarrow: return "RangeTooNarrow";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(name_of(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }
  ErrorCategory category() const { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace hierlogit
