#include "skewfit/error.hpp"

namespace skewfit {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::CollectorError: return "CollectorError";
    case ErrorCode::AbsoluteContinuityViolation: return "AbsoluteContinuityViolation";
    case ErrorCode::PreconditionUnmet: return "PreconditionUnmet";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace skewfit
