#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace muonkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `muonkit` tool. `args` excludes the program name.
/// Subcommands: run, compare, verify, presets.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}    // namespace muonkit::cli
