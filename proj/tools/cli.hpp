#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace anchormdp::cli {

/// Runs the command line `args` (without the program name). Returns the exit
/// status: 0 on success, 1 on a runtime or verification failure, and the
/// CLI11 status (nonzero) on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anchormdp::cli
