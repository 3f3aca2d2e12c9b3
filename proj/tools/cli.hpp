#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfpred::cli {

// Runs the command line `args` (without the program name). Returns the
// process exit code: 0 success, 1 estimation failure (positivity, replicate
// failures, singular fits), 2 usage, schema or data errors. On failure the
// first line written to `err` is "error: <code>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cfpred::cli
