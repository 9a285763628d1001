#include "hebert/common/error.hpp"

namespace hebert {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::FormMismatch: return "FORM_MISMATCH";
    case ErrorCode::LevelMismatch: return "LEVEL_MISMATCH";
    case ErrorCode::ScaleMismatch: return "SCALE_MISMATCH";
    case ErrorCode::OutOfLevels: return "OUT_OF_LEVELS";
    case ErrorCode::MissingKey: return "MISSING_KEY";
    case ErrorCode::Precision: return "PRECISION";
    case ErrorCode::Format: return "FORMAT";
    case ErrorCode::ParamsMismatch: return "PARAMS_MISMATCH";
    case ErrorCode::NonFinite: return "NON_FINITE";
    case ErrorCode::Convergence: return "CONVERGENCE";
    case ErrorCode::InsecureDisabled: return "INSECURE_DISABLED";
    case ErrorCode::LayoutMismatch: return "LAYOUT_MISMATCH";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

Error::Error(std::string module, ErrorCode code, const std::string& message)
    : std::runtime_error(module + ": " + message), module_(std::move(module)), code_(code) {}

void fail(std::string_view module, ErrorCode code, const std::string& message) {
  throw Error(std::string(module), code, message);
}

}  // namespace hebert
