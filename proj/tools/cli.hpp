#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pg::cli {

enum ExitCode { kOk = 0, kUsage = 1, kNoEquilibrium = 2 };

// Runs one command line (without the program name). Results go to `out`
// unless -o names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pg::cli
