#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyfly {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveExtent,
  DegeneratePolytope,
  InfeasibleDuals,
  NotSeparated,
  NonPositiveDt,
  FreefallSingularity,
  DegenerateAttitude,
  DegenerateSegment,
  ParseError,
  InvalidEnvironment,
  InfeasibleSpec,
  NoPath,
  DegenerateDtRange,
  DimensionMismatch,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveExtent: return "NonPositiveExtent";
    case ErrorCode::DegeneratePolytope: return "DegeneratePolytope";
    case ErrorCode::InfeasibleDuals: return "InfeasibleDuals";
    case ErrorCode::NotSeparated: return "NotSeparated";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::FreefallSingularity: return "FreefallSingularity";
    case ErrorCode::DegenerateAttitude: return "DegenerateAttitude";
    case ErrorCode::DegenerateSegment: return "DegenerateSegment";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidEnvironment: return "InvalidEnvironment";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::DegenerateDtRange: return "DegenerateDtRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace polyfly
