#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace docnade::cli {

/// Runs the command line `args` (args[0] is the program name). Returns the
/// process exit code: 0 success, 1 runtime error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace docnade::cli
