#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace prl {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_numerical = 3 };

/// Runs one command line (`args` excludes the program name) and returns the
/// process exit code. Subcommands: estimate, hclub, sample-portfolios,
/// simulate, empirical, report.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prl
