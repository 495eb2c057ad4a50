#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace streamstat {

enum class ErrorCode {
  DimensionMismatch,
  NotPositiveDefinite,
  Degenerate,
  SingularCumulative,
  NonPositiveLambda,
  StillDeficient,
  InsufficientData,
  InsufficientHistory,
  RankDeficientContrast,
  SchemeMismatch,
  OutOfRange,
  NotConverged,
  Separation,
  DomainViolation,
  InvalidNu,
  InvalidConfig,
  SchemaMismatch,
  ParseError,
  CorruptSnapshot,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace streamstat
