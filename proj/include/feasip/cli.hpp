#pragma once

#include <ostream>

namespace feasip {

/// Exit statuses shared by the subcommands.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailed = 1,       ///< not converged, or audit infeasible
    kExitUsage = 2,        ///< bad flags or schema errors
    kExitInfeasibleStart = 3,
    kExitStall = 4,
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace feasip
