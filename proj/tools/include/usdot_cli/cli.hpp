#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace usdot::cli {

enum ExitCode : int {
  kOk = 0,
  kParseError = 1,
  kSolverFailure = 2,
  kDiagnosticsFailure = 3,
};

/// Runs `usdot <subcommand> ...`; args[0] is the program name. Human
/// readable output goes to `out`, errors to `err`, artifacts to files.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

/// Text that reads back to the same double (%.17g).
[[nodiscard]] std::string format_double(double v);

}  // namespace usdot::cli
