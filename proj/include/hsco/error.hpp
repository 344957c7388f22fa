#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hsco {

enum class ErrorCode {
  DimensionMismatch,
  NotSymmetric,
  Singular,
  SingularKKT,
  EmptyMatrix,
  NonPositiveTau,
  InfeasiblePoint,
  BadLabel,
  MissingBiasColumn,
  RankDeficientActiveSet,
  DirectionFailure,
  MalformedLine,
  NonIncreasingIndex,
  EmptyFile,
  BadDimensions,
  ZeroStartVector,
  EmptyTrialList,
  InvalidArgument,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::SingularKKT: return "SingularKKT";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::NonPositiveTau: return "NonPositiveTau";
    case ErrorCode::InfeasiblePoint: return "InfeasiblePoint";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::MissingBiasColumn: return "MissingBiasColumn";
    case ErrorCode::RankDeficientActiveSet: return "RankDeficientActiveSet";
    case ErrorCode::DirectionFailure: return "DirectionFailure";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonIncreasingIndex: return "NonIncreasingIndex";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::BadDimensions: return "BadDimensions";
    case ErrorCode::ZeroStartVector: return "ZeroStartVector";
    case ErrorCode::EmptyTrialList: return "EmptyTrialList";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failures also remember the 1-based line they occurred on.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, const std::string& what)
      : Error(code, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace hsco
