#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace songpop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one command. `args` excludes the program name. Reports without an
/// `--out` target go to `out`; logs, usage and errors go to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace songpop::cli
