#include "rawdepth/errors.hpp"

namespace rawdepth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::OutOfValidDomain: return "OutOfValidDomain";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonMonotoneRadial: return "NonMonotoneRadial";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::DegenerateTranslation: return "DegenerateTranslation";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoValidPixels: return "NoValidPixels";
    case ErrorCode::DegenerateDepth: return "DegenerateDepth";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

static std::string format_message(ErrorCode code, const std::string& detail) {
  std::string msg(to_string(code));
  if (!detail.empty()) {
    msg += ": ";
    msg += detail;
  }
  return msg;
}

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(format_message(code, detail)), code_(code), detail_(std::move(detail)) {}

}  // namespace rawdepth
