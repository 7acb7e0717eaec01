#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rawdepth {

enum class ErrorCode {
  NonPositiveDepth,
  OutOfValidDomain,
  NoConvergence,
  NonMonotoneRadial,
  ZeroVector,
  InvalidParameter,
  DimensionMismatch,
  NonMonotonicTime,
  DegenerateTranslation,
  EmptyInput,
  NoValidPixels,
  DegenerateDepth,
  Diverged,
  ParseError,
  UnknownModel,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable code plus a detail string. For
/// InvalidParameter the detail is the offending key.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace rawdepth
