#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace blindsr::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3, kIO = 4 };

/// Runs one command line (args excludes the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blindsr::cli
