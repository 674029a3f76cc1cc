#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace feedaudit::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitPartial = 3 };

/// Environment variable naming the default store root.
inline constexpr const char* kStoreEnv = "FEEDAUDIT_STORE";
inline constexpr const char* kDefaultStore = "feedaudit-store";

/// Parses `args` (without the program name) and runs one command:
/// generate, run, calibrate, analyze, report or presets export.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace feedaudit::cli
