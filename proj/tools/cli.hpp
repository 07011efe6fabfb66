#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chainrec::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitProvider = 3,
};

/// Runs one subcommand. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chainrec::cli
