#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace airguard::cli {

/// Exit codes shared by every subcommand.
enum Exit : int { kOk = 0, kUsage = 2, kIo = 3, kFailure = 4 };

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace airguard::cli
