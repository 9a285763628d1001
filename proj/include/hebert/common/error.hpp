#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hebert {

/// Stable error codes. The CLI maps these onto process exit codes.
enum class ErrorCode {
  InvalidArgument,
  FormMismatch,
  LevelMismatch,
  ScaleMismatch,
  OutOfLevels,
  MissingKey,
  Precision,
  Format,
  ParamsMismatch,
  NonFinite,
  Convergence,
  InsecureDisabled,
  LayoutMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying the originating module name and a stable code.
class Error : public std::runtime_error {
 public:
  Error(std::string module, ErrorCode code, const std::string& message);

  const std::string& module() const noexcept { return module_; }
  ErrorCode code() const noexcept { return code_; }

 private:
  std::string module_;
  ErrorCode code_;
};

[[noreturn]] void fail(std::string_view module, ErrorCode code, const std::string& message);

inline void require(bool cond, std::string_view module, ErrorCode code, const std::string& message) {
  if (!cond) fail(module, code, message);
}

}  // namespace hebert
