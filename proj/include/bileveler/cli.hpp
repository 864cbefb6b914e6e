#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bileveler {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitInfeasible = 2, kExitBudget = 3 };

// Entry point shared by the executable and the tests. args excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bileveler
