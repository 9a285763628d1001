#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "hebert/common/error.hpp"

namespace hebert::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitCrypto = 4;
inline constexpr int kExitLevels = 5;

int exit_code(ErrorCode code);

/// args[0] is the program name. Errors end in one line of the form
///   error module=<m> code=<c> exit=<n> message="<text>"
/// on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hebert::cli
