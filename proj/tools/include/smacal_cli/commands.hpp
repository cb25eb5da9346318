#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smacal::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_validation = 2;

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 on success, 2 on usage or validation errors, 1 on
/// runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smacal::cli
