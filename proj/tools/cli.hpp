#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace narrowcap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the command line `args` (without the program name). Results go to
/// `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands "--config FILE" into flags. Keys already given on the command line
/// win over the file. Throws std::runtime_error on unreadable or malformed
/// files.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace narrowcap::cli
