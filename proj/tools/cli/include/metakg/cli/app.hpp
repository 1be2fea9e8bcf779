#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace metakg::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 2,
    kExitBackend = 3,
    kExitInvariant = 4,
};

/// Runs the tool with `args` (program name excluded). Machine-readable
/// results go to `out`, logs and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace metakg::cli
