#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace seqmark {

/// Runs the `seqmark` command line. `args` excludes the program name.
/// Errors are reported on `err` prefixed with "error:"; the return value is the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace seqmark
