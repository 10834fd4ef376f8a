#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace drutil::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kInput = 2, kNumeric = 3 };

// Runs the command line `args` (without the program name). The report goes
// to `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drutil::cli
