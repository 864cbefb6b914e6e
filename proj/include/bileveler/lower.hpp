#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "bileveler/ga.hpp"
#include "bileveler/linalg.hpp"
#include "bileveler/problem.hpp"
#include "bileveler/report.hpp"

namespace bileveler {

enum class LowerMode { Linear, ConvexQuadratic, Blackbox };

std::string_view to_string(LowerMode mode);

// Hessian of f with respect to the lower variables, as expressions over the
// upper variables. Requires degree <= 2 in the lower variables.
std::vector<std::vector<PolyExpression>> lower_hessian(const BilevelProblem& problem);

// True when the lower Hessian is positive semidefinite (eigenvalue floor
// -1e-10) for every x in the upper box. Entries must be constant or affine
// in x; affine entries are checked at every box vertex.
bool lower_hessian_psd(const BilevelProblem& problem);

LowerMode lower_solver_select(const BilevelProblem& problem);

struct LowerConfig {
  GAConfig ga = [] {  // blackbox mode only
    GAConfig g;
    g.population = 20;
    g.generations = 60;
    return g;
  }();
  double eps_g = 1e-9;
  std::size_t max_iterations = 10000;
  double step_tol = 1e-10;
  // Break follower ties toward (optimistic) or against (pessimistic) F when
  // F is linear in y. Skipped when F and f coincide.
  bool apply_position = true;
};

struct LowerSolution {
  std::vector<double> y;
  double f = 0.0;
  SolveStatus status = SolveStatus::Optimal;
  std::size_t iterations = 0;
};

// Optimal follower response for fixed x. Throws LowerInfeasible when the
// follower has no feasible point.
LowerSolution solve_lower(const BilevelProblem& problem, std::span<const double> x, LowerMode mode,
                          const LowerConfig& config = {});

// Least total violation sum_q max(0, g_q) (|g_q| for equalities) the
// follower can reach at x; 0 when it is feasible. +inf when the rows are not
// linear in the lower variables.
double lower_infeasibility(const BilevelProblem& problem, std::span<const double> x);

// Expression over the lower variables only, with x substituted.
PolyExpression instantiate(const BilevelProblem& problem, const PolyExpression& expr, std::span<const double> x);

}  // namespace bileveler
