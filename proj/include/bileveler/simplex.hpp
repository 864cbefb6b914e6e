#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace bileveler {

enum class RowRelation { LessEqual, GreaterEqual, Equal };

struct LinearRow {
  std::vector<double> coeffs;
  RowRelation relation = RowRelation::LessEqual;
  double rhs = 0.0;
};

struct VarBounds {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
};

// min c.x subject to rows and per-variable bounds. Lower bounds must be
// finite; upper bounds may be +inf (multiplier vectors in certificate LPs).
struct LinearProgramData {
  std::vector<double> c;
  std::vector<LinearRow> rows;
  std::vector<VarBounds> boxes;

  std::size_t dimension() const { return c.size(); }
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  // Row multipliers in the minimization convention: <= rows carry values
  // <= 0, >= rows values >= 0, equality rows are free.
  std::vector<double> row_duals;
  // c - A^T row_duals.
  std::vector<double> reduced_costs;
  std::size_t pivots = 0;
};

// Two-phase dense tableau simplex with Bland's rule.
LpSolution simplex_solve(const LinearProgramData& lp);

// Bounded-variable Lagrangian dual value b.pi + sum_j min(r_j l_j, r_j u_j)
// evaluated from the returned multipliers; equals the primal objective at
// an optimal basis.
double dual_objective(const LinearProgramData& lp, const LpSolution& solution);

// Largest violation of rows and boxes at x.
double lp_violation(const LinearProgramData& lp, const std::vector<double>& x);

}  // namespace bileveler
