#pragma once

#include <iosfwd>

namespace ringlock {

/// Exit codes of run_cli.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitInvalid = 3,
  kExitLockLoss = 4,
  kExitUnstable = 5,
};

/// The ringlock command line: ringdown | sweep | bode | lock | sense | budget.
/// Errors are reported on `err` as a single JSON object.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ringlock
