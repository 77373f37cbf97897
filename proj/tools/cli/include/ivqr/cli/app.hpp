#pragma once

#include <iosfwd>

namespace ivqr::cli {

/// Exit codes. Errors raised by the core library map by category.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

const char* tool_version();

/// Parses arguments, runs one subcommand and returns the exit code. Reports
/// go to `out` (or the --out file); error JSON goes to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ivqr::cli
