#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mb2d::cli {

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, data_error = 3, divergence = 4 };

/// Runs one command line (without the program name). Messages go to `out`
/// and errors to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mb2d::cli
