#include "streamstat/error.hpp"

namespace streamstat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::SingularCumulative: return "SingularCumulative";
    case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorCode::StillDeficient: return "StillDeficient";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::RankDeficientContrast: return "RankDeficientContrast";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::Separation: return "Separation";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::InvalidNu: return "InvalidNu";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace streamstat
