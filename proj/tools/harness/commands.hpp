#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace admg::harness {

/// Runs one validated command. Throws ValidationError / NumericalError.
void execute(const RunConfig& config, std::ostream& out);

/// execute() with errors reported on `err` and mapped to exit codes:
/// 0 success, 2 validation or I/O error, 3 numerical failure.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Command-line front end: args[0] is the program name. `--config FILE`
/// loads a config or manifest whose settings the other flags override.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace admg::harness
