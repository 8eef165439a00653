#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace jm::cli {

enum ExitCode { kPass = 0, kFail = 1, kConfigError = 2 };

// Runs one subcommand. Data goes to --out (plus <out>.meta.json) or to `out`
// when no path is given; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jm::cli
