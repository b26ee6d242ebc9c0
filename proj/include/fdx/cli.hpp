#ifndef FDX_CLI_HPP
#define FDX_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace fdx::cli {

/// Exit codes are a stable contract: 0 success/feasible, 1 infeasible but
/// valid input, 2 input error.
enum exit_code : int { kOk = 0, kInfeasible = 1, kInputError = 2 };

/// Runs one CLI invocation (args excludes the program name). All file
/// outputs are written atomically; identical inputs and seeds produce
/// byte-identical files.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace fdx::cli

#endif  // FDX_CLI_HPP
