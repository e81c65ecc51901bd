#pragma once

#include <iosfwd>

namespace ltcar::app {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitIo = 4,
};

/// Entry point of `ltcar`: subcommands tire, equilibria, simulate and
/// explore. Messages go to `out` and diagnostics to `err`; returns the exit
/// code. Environment overrides: LTCAR_OUTPUT_DIR and LTCAR_THREADS, both
/// below the corresponding command-line flags.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace ltcar::app
