#include "bileveler/bnb.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "bileveler/error.hpp"
#include "bileveler/simplex.hpp"

namespace bileveler {
namespace {

enum class Fix : std::uint8_t { Free, MultiplierZero, ConstraintTight };

}  // namespace

SolveReport mpec_branch_and_bound(const MpecProblem& mpec, const BnbOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  mpec.validate();
  const std::size_t dim = mpec.base.dimension();

  LinearProgramData root;
  const auto obj = mpec.base.objective.affine(dim);
  if (!obj) throw Error(ErrorCode::NonlinearBase, "mpec objective is not linear");
  root.c = obj->coeffs;
  for (const Constraint& c : mpec.base.constraints) {
    const auto a = c.expr.affine(dim);
    if (!a) throw Error(ErrorCode::NonlinearBase, "mpec constraint '" + c.name + "' is not linear");
    root.rows.push_back({a->coeffs, c.relation == Relation::Equal ? RowRelation::Equal : RowRelation::LessEqual, -a->constant});
  }
  for (const VariableDef& v : mpec.base.variables) root.boxes.push_back({v.lower, v.upper});

  const std::size_t pairs = mpec.complementarity_pairs.size();
  std::vector<std::vector<Fix>> stack{std::vector<Fix>(pairs, Fix::Free)};
  double incumbent = std::numeric_limits<double>::infinity();
  std::vector<double> best;
  std::uint64_t nodes = 0, lp_solves = 0, pruned_bound = 0, pruned_infeasible = 0, updates = 0;
  bool budget_hit = false;

  while (!stack.empty()) {
    if (nodes >= options.node_limit) {
      budget_hit = true;
      break;
    }
    const std::vector<Fix> fixes = std::move(stack.back());
    stack.pop_back();
    ++nodes;

    LinearProgramData lp = root;
    for (std::size_t k = 0; k < pairs; ++k) {
      const ComplementarityPair& p = mpec.complementarity_pairs[k];
      if (fixes[k] == Fix::MultiplierZero) lp.boxes[p.multiplier].upper = lp.boxes[p.multiplier].lower;
      if (fixes[k] == Fix::ConstraintTight) lp.rows[p.constraint].relation = RowRelation::Equal;
    }
    const LpSolution sol = simplex_solve(lp);
    ++lp_solves;
    if (sol.status != LpStatus::Optimal) {
      ++pruned_infeasible;
      continue;
    }
    if (sol.objective >= incumbent - 1e-9 * (1.0 + std::abs(incumbent))) {
      ++pruned_bound;
      continue;
    }

    std::size_t branch = pairs;
    double worst = options.complementarity_tol;
    for (std::size_t k = 0; k < pairs; ++k) {
      if (fixes[k] != Fix::Free) continue;
      const ComplementarityPair& p = mpec.complementarity_pairs[k];
      const double g = mpec.base.constraints[p.constraint].expr.evaluate(sol.x);
      const double prod = std::abs(sol.x[p.multiplier] * g);
      if (prod > worst) {
        worst = prod;
        branch = k;
      }
    }
    if (branch == pairs) {
      incumbent = sol.objective;
      best = sol.x;
      ++updates;
      if (options.on_incumbent) options.on_incumbent(incumbent);
      continue;
    }
    std::vector<Fix> tight = fixes, zero = fixes;
    tight[branch] = Fix::ConstraintTight;
    zero[branch] = Fix::MultiplierZero;
    stack.push_back(std::move(tight));
    stack.push_back(std::move(zero));
  }

  SolveReport report;
  report.method = "kkt-bnb";
  report.upper_evals = nodes;
  report.lower_solves = lp_solves;
  report.diagnostics["nodes"] = static_cast<std::int64_t>(nodes);
  report.diagnostics["pruned_bound"] = static_cast<std::int64_t>(pruned_bound);
  report.diagnostics["pruned_infeasible"] = static_cast<std::int64_t>(pruned_infeasible);
  report.diagnostics["incumbent_updates"] = static_cast<std::int64_t>(updates);
  report.diagnostics["open_nodes"] = static_cast<std::int64_t>(stack.size());
  if (!best.empty()) {
    const std::size_t n = mpec.n_upper, m = mpec.n_lower;
    report.x.assign(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(n));
    report.y.assign(best.begin() + static_cast<std::ptrdiff_t>(n), best.begin() + static_cast<std::ptrdiff_t>(n + m));
    report.F_value = mpec.base.objective.evaluate(best);
    report.f_value = mpec.lower_objective.evaluate(best);
    report.max_violation = mpec.base.max_violation(best);
    report.diagnostics["complementarity_residual_e12"] =
        static_cast<std::int64_t>(std::llround(mpec.complementarity_residual(best) * 1e12));
  }
  if (budget_hit)
    report.status = SolveStatus::BudgetExceeded;
  else
    report.status = best.empty() ? SolveStatus::Infeasible : SolveStatus::Optimal;
  report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace bileveler
