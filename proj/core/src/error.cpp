#include "chfb/error.hpp"

namespace chfb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::DegenerateImage: return "degenerate-image";
    case ErrorCode::Config: return "config";
    case ErrorCode::TooSmall: return "too-small";
    case ErrorCode::ContractViolation: return "contract-violation";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::UnfittedNormalizer: return "unfitted-normalizer";
    case ErrorCode::InvalidSelection: return "invalid-selection";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::UndefinedAuc: return "undefined-auc";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace chfb
