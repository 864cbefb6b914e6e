#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bileveler/ga.hpp"
#include "bileveler/oracle.hpp"
#include "bileveler/problem.hpp"
#include "bileveler/report.hpp"

namespace bileveler {

enum class Level { Upper, Lower };

struct VariablePartition {
  std::vector<std::size_t> upper;
  std::vector<std::size_t> lower;
  std::vector<std::pair<Level, std::size_t>> index_map;  // original index -> (level, position)

  static VariablePartition from_lists(std::vector<std::size_t> upper, std::vector<std::size_t> lower);

  bool all_upper() const { return lower.empty(); }
  // Throws InvalidPartition unless upper and lower split 0..n-1 exactly.
  void validate(std::size_t n) const;
  // "upper: x2 | lower: x1, x3"
  std::string describe(const SingleLevelProblem& problem) const;

  // Original point -> concatenated (upper, lower) point and back.
  std::vector<double> to_decomposed(const std::vector<double>& original) const;
  std::vector<double> to_original(const std::vector<double>& upper_part, const std::vector<double>& lower_part) const;

  friend bool operator==(const VariablePartition&, const VariablePartition&) = default;
};

// Variables with a power above one or inside abs go up; then, while a
// monomial holds two or more lower variables, the lower variable involved in
// most such monomials is promoted (ties to the lowest index).
VariablePartition classify_variables(const SingleLevelProblem& problem);

// Same objective at both levels; a constraint goes down iff it references a
// lower variable.
BilevelProblem decompose(const SingleLevelProblem& problem, const VariablePartition& partition);

SolveReport bobd_solve(const SingleLevelProblem& problem, const GAConfig& ga, const GridSpec& grid_fallback = {});

// Penalty GA over every variable of a single-level problem.
SolveReport pure_ga_solve(const SingleLevelProblem& problem, const GAConfig& ga);

}  // namespace bileveler
