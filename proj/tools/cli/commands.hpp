#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace truewm::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitNegative = 1,  // verification ran and rejected the claim
  kExitUsage = 2,
  kExitRuntime = 3,
};

/// Runs the command line `args` (without the program name) and returns the
/// process exit code. Output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace truewm::cli
