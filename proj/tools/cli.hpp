#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace impactdp::cli {

enum ExitCode : int {
    ok = 0,
    check_failed = 1,
    invalid_input = 2,
    numeric_failure = 3,
    capacity_exceeded = 4,
};

/// Runs one command. `args` excludes the program name. Reports go to --out
/// when given, otherwise to `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace impactdp::cli
