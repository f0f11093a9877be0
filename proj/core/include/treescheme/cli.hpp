#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace treescheme {

/// Full command-line driver. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 failure, 2 authentication failure.
/// Human-readable output goes to `out`; errors are emitted as one-line JSON
/// objects on `err`.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace treescheme
