#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bileveler {

enum class SolveStatus { Optimal, Feasible, Infeasible, BudgetExceeded };

std::string_view to_string(SolveStatus status);

// Uniform result of every solver. For single-level solves x holds the full
// point and y is empty.
struct SolveReport {
  std::string method;
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> x;
  std::vector<double> y;
  double F_value = 0.0;
  double f_value = 0.0;
  double max_violation = 0.0;
  std::uint64_t lower_solves = 0;
  std::uint64_t upper_evals = 0;
  std::int64_t wall_ms = 0;
  std::uint64_t seed = 0;
  // Free-form markers such as "all-upper" or "partition=upper:x2|lower:x1,x3".
  std::vector<std::string> flags;
  // Solver-specific counters (bnb nodes, empty lower sets, ...).
  std::map<std::string, std::int64_t> diagnostics;

  bool succeeded() const { return status == SolveStatus::Optimal || status == SolveStatus::Feasible; }
};

}  // namespace bileveler
