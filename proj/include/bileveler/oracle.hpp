#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bileveler/problem.hpp"
#include "bileveler/report.hpp"

namespace bileveler {

struct GridSpec {
  std::size_t points_per_axis = 101;
  double eps_f = 1e-9;  // applied as eps_f * (1 + |phi|)
  double eps_g = 1e-9;
  double max_points = 1e8;  // nominal full-grid size the oracle accepts
  std::size_t workers = 1;
  // Disables interval-bound pruning. Pruning never changes results; the
  // flag exists so the pruned search can be checked against plain
  // enumeration.
  bool exhaustive = false;

  double member_threshold(double phi) const { return phi + eps_f * (1.0 + std::abs(phi)); }
  void validate() const;
};

// linspace over [lower, upper] including both endpoints; a degenerate box
// yields a single point.
std::vector<double> grid_axis(const VariableDef& v, std::size_t points_per_axis);

struct ReactionSet {
  std::vector<double> x;
  std::vector<std::vector<double>> members;
  double phi = 0.0;
};

// All lower grid points y with g(x, y) <= eps_g.
std::vector<std::vector<double>> lower_feasible_set(const BilevelProblem& problem, std::span<const double> x,
                                                    const GridSpec& grid);

// Throws EmptyLowerFeasible when no lower grid point is feasible for x.
ReactionSet reaction_set(const BilevelProblem& problem, std::span<const double> x, const GridSpec& grid);

// Optimistic: member minimizing F(x, .); pessimistic: maximizing. Ties go to
// the lexicographically smallest y. F indexes the concatenated (x, y).
std::vector<double> choose(const ReactionSet& reaction, const PolyExpression& F, Position position);

// Nested exhaustive search over the upper grid.
SolveReport solve_bilevel_grid(const BilevelProblem& problem, const GridSpec& grid);

SolveReport solve_single_grid(const SingleLevelProblem& problem, const GridSpec& grid);

}  // namespace bileveler
