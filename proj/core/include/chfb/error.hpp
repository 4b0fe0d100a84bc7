#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chfb {

enum class ErrorCode {
  InvalidInput,
  DegenerateImage,
  Config,
  TooSmall,
  ContractViolation,
  InsufficientData,
  UnfittedNormalizer,
  InvalidSelection,
  Shape,
  Divergence,
  UndefinedAuc,
  Degenerate,
  NotFound,
  Conflict,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chfb
