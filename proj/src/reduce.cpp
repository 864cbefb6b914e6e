#include "bileveler/reduce.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "bileveler/error.hpp"
#include "bileveler/lower.hpp"

namespace bileveler {
namespace {

std::string unique_name(const std::set<std::string>& taken, std::string name) {
  while (taken.count(name)) name += "_";
  return name;
}

struct AffineRow {
  std::vector<double> coeffs;
  double constant;
};

AffineRow affine_or_throw(const PolyExpression& e, std::size_t dim, const std::string& what) {
  auto a = e.affine(dim);
  if (!a) throw Error(ErrorCode::Structural, what + " is not linear");
  return {std::move(a->coeffs), a->constant};
}

}  // namespace

double MpecProblem::complementarity_residual(std::span<const double> point) const {
  double worst = 0.0;
  for (const ComplementarityPair& p : complementarity_pairs)
    worst = std::max(worst, std::abs(point[p.multiplier] * base.constraints[p.constraint].expr.evaluate(point)));
  return worst;
}

void MpecProblem::validate() const {
  base.validate();
  if (n_upper + n_lower > base.dimension()) throw Error(ErrorCode::Structural, "mpec level sizes exceed the base dimension");
  for (const ComplementarityPair& p : complementarity_pairs) {
    if (p.multiplier < n_upper + n_lower || p.multiplier >= base.dimension())
      throw Error(ErrorCode::Structural, "complementarity pair does not reference a multiplier");
    if (p.constraint >= base.constraints.size() || base.constraints[p.constraint].relation != Relation::LessEqual)
      throw Error(ErrorCode::Structural, "complementarity pair does not reference an inequality");
  }
}

MpecProblem kkt_reduce(const BilevelProblem& problem, const KktOptions& options) {
  problem.validate();
  if (problem.position != Position::Optimistic)
    throw Error(ErrorCode::PessimisticUnsupported, "KKT reduction requires the optimistic position");
  const std::vector<std::size_t> lower = problem.lower_indices();
  for (const Constraint& g : problem.lower_constraints)
    if (g.expr.degree_in_subset(lower) > 1)
      throw Error(ErrorCode::NonConvexLowerLevel, "lower constraint '" + g.name + "' is nonlinear in the lower variables");
  if (problem.lower_objective.degree_in_subset(lower) > 2 || !lower_hessian_psd(problem))
    throw Error(ErrorCode::NonConvexLowerLevel, "lower objective is not a convex quadratic in the lower variables");

  const std::size_t n = problem.n_upper(), m = problem.n_lower();
  std::vector<Constraint> ineq;
  for (const Constraint& g : problem.lower_constraints) {
    if (g.relation == Relation::Equal) {
      ineq.push_back({g.expr, Relation::LessEqual, g.name + " (<=)"});
      ineq.push_back({-g.expr, Relation::LessEqual, g.name + " (>=)"});
    } else {
      ineq.push_back(g);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const VariableDef& v = problem.lower_vars[j];
    ineq.push_back({PolyExpression(v.lower, {{-1.0, {{n + j, 1}}}}), Relation::LessEqual, v.name + " lower bound"});
    ineq.push_back({PolyExpression(-v.upper, {{1.0, {{n + j, 1}}}}), Relation::LessEqual, v.name + " upper bound"});
  }

  MpecProblem out;
  out.n_upper = n;
  out.n_lower = m;
  out.lower_objective = problem.lower_objective;
  out.base.variables = problem.all_vars();
  out.base.objective = problem.upper_objective;
  std::set<std::string> taken;
  for (const VariableDef& v : out.base.variables) taken.insert(v.name);
  for (std::size_t q = 0; q < ineq.size(); ++q) {
    const std::string name = unique_name(taken, "lambda" + std::to_string(q + 1));
    taken.insert(name);
    out.base.variables.push_back({name, 0.0, options.lambda_max});
  }

  out.base.constraints = problem.upper_constraints;
  for (std::size_t q = 0; q < ineq.size(); ++q) {
    out.complementarity_pairs.push_back({n + m + q, out.base.constraints.size()});
    out.base.constraints.push_back(ineq[q]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    PolyExpression s = problem.lower_objective.derivative(n + j);
    for (std::size_t q = 0; q < ineq.size(); ++q) {
      const PolyExpression dg = ineq[q].expr.derivative(n + j);
      if (!dg.is_constant() || dg.constant() != 0.0) s = s + PolyExpression::variable(n + m + q) * dg;
    }
    out.base.constraints.push_back({s, Relation::Equal, "stationarity " + problem.lower_vars[j].name});
  }
  out.validate();
  return out;
}

LinearBilevelData extract_linear_data(const BilevelProblem& problem) {
  const std::size_t n = problem.n_upper(), m = problem.n_lower(), dim = n + m;
  LinearBilevelData data;
  const AffineRow F = affine_or_throw(problem.upper_objective, dim, "upper objective");
  data.c_x.assign(F.coeffs.begin(), F.coeffs.begin() + static_cast<std::ptrdiff_t>(n));
  data.c_y.assign(F.coeffs.begin() + static_cast<std::ptrdiff_t>(n), F.coeffs.end());
  const AffineRow f = affine_or_throw(problem.lower_objective, dim, "lower objective");
  data.d.assign(f.coeffs.begin() + static_cast<std::ptrdiff_t>(n), f.coeffs.end());

  // expr <= 0 becomes -coeffs . v >= constant.
  auto push = [&](DenseMatrix& X, DenseMatrix& Y, std::vector<double>& rhs, const AffineRow& r, double sign) {
    std::vector<double> xs(n), ys(m);
    for (std::size_t i = 0; i < n; ++i) xs[i] = -sign * r.coeffs[i];
    for (std::size_t j = 0; j < m; ++j) ys[j] = -sign * r.coeffs[n + j];
    X.push_back(std::move(xs));
    Y.push_back(std::move(ys));
    rhs.push_back(sign * r.constant);
  };
  for (const Constraint& G : problem.upper_constraints) {
    const AffineRow r = affine_or_throw(G.expr, dim, "upper constraint '" + G.name + "'");
    push(data.A_x, data.A_y, data.a, r, 1.0);
    if (G.relation == Relation::Equal) push(data.A_x, data.A_y, data.a, r, -1.0);
  }
  for (const Constraint& g : problem.lower_constraints) {
    const AffineRow r = affine_or_throw(g.expr, dim, "lower constraint '" + g.name + "'");
    push(data.B_x, data.B_y, data.b, r, 1.0);
    if (g.relation == Relation::Equal) push(data.B_x, data.B_y, data.b, r, -1.0);
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> e(m, 0.0);
    e[j] = 1.0;
    data.B_x.emplace_back(n, 0.0);
    data.B_y.push_back(e);
    data.b.push_back(problem.lower_vars[j].lower);
    e[j] = -1.0;
    data.B_x.emplace_back(n, 0.0);
    data.B_y.push_back(e);
    data.b.push_back(-problem.lower_vars[j].upper);
  }
  return data;
}

LinearProgramData dual_certificate_lp(const LinearBilevelData& data, std::span<const double> x,
                                      std::span<const double> y) {
  const std::size_t n = data.c_x.size(), m = data.d.size(), rows = data.b.size();
  if (x.size() != n || y.size() != m) throw Error(ErrorCode::DimensionMismatch, "certificate point has the wrong dimension");
  if (data.B_x.size() != rows || data.B_y.size() != rows) throw Error(ErrorCode::DimensionMismatch, "inconsistent lower data");
  std::vector<double> slack_rhs(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (data.B_x[i].size() != n || data.B_y[i].size() != m)
      throw Error(ErrorCode::DimensionMismatch, "inconsistent lower data");
    double bx = 0.0, lhs = 0.0;
    for (std::size_t k = 0; k < n; ++k) bx += data.B_x[i][k] * x[k];
    for (std::size_t j = 0; j < m; ++j) lhs += data.B_y[i][j] * y[j];
    slack_rhs[i] = data.b[i] - bx;
    if (lhs < slack_rhs[i] - 1e-9 * (1.0 + std::abs(slack_rhs[i])))
      throw Error(ErrorCode::Structural, "certificate point violates the lower constraints");
  }

  LinearProgramData lp;
  lp.c.assign(rows, 0.0);
  lp.boxes.assign(rows, VarBounds{0.0, std::numeric_limits<double>::infinity()});
  for (std::size_t j = 0; j < m; ++j) {
    LinearRow r{std::vector<double>(rows), RowRelation::Equal, data.d[j]};
    for (std::size_t i = 0; i < rows; ++i) r.coeffs[i] = data.B_y[i][j];
    lp.rows.push_back(std::move(r));
  }
  double dy = 0.0;
  for (std::size_t j = 0; j < m; ++j) dy += data.d[j] * y[j];
  lp.rows.push_back({slack_rhs, RowRelation::GreaterEqual, dy});
  return lp;
}

bool certifies_lower_optimal(const LinearBilevelData& data, std::span<const double> x, std::span<const double> y) {
  return simplex_solve(dual_certificate_lp(data, x, y)).status == LpStatus::Optimal;
}

double ValueFunctionProgram::value_gap(std::span<const double> point) const {
  const double p = phi(point.first(n_upper));
  if (!std::isfinite(p)) return std::numeric_limits<double>::infinity();
  return lower_objective.evaluate(point) - p - delta_rel * (1.0 + std::abs(p));
}

bool ValueFunctionProgram::feasible(std::span<const double> point, double eps_g) const {
  if (base.max_violation(point) > eps_g) return false;
  const double p = phi(point.first(n_upper));
  if (!std::isfinite(p)) return false;
  return lower_objective.evaluate(point) <= p + delta_rel * (1.0 + std::abs(p));
}

ValueFunctionProgram value_function_reduce(const BilevelProblem& problem, PhiFunction phi, double delta_rel) {
  problem.validate();
  ValueFunctionProgram out;
  out.base.variables = problem.all_vars();
  out.base.objective = problem.upper_objective;
  out.base.constraints = problem.upper_constraints;
  out.base.constraints.insert(out.base.constraints.end(), problem.lower_constraints.begin(),
                              problem.lower_constraints.end());
  out.n_upper = problem.n_upper();
  out.lower_objective = problem.lower_objective;
  out.phi = std::move(phi);
  out.delta_rel = delta_rel;
  return out;
}

ValueFunctionProgram value_function_reduce(const BilevelProblem& problem, const SurrogateModel& phi_hat,
                                           double delta_rel) {
  if (!phi_hat.trained() || phi_hat.centers.size() < problem.n_upper() + 1)
    throw Error(ErrorCode::UntrainedSurrogate, "surrogate needs at least " + std::to_string(problem.n_upper() + 1) +
                                                   " samples");
  if (phi_hat.dimension() != problem.n_upper())
    throw Error(ErrorCode::DimensionMismatch, "surrogate dimension differs from the upper dimension");
  return value_function_reduce(problem, PhiFunction([phi_hat](std::span<const double> x) { return phi_hat(x); }),
                               delta_rel);
}

SolveReport solve_value_function_grid(const ValueFunctionProgram& program, const GridSpec& grid) {
  grid.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto& vars = program.base.variables;
  std::vector<std::vector<double>> axes;
  double nominal = 1.0;
  for (const VariableDef& v : vars) {
    axes.push_back(grid_axis(v, grid.points_per_axis));
    nominal *= static_cast<double>(axes.back().size());
  }
  SolveReport report;
  report.method = "value-function-grid";
  if (nominal > grid.max_points) {
    report.status = SolveStatus::BudgetExceeded;
    report.flags.push_back("grid-budget");
    return report;
  }
  std::vector<std::size_t> idx(vars.size(), 0);
  std::vector<double> point(vars.size()), best;
  double best_F = std::numeric_limits<double>::infinity();
  std::uint64_t visited = 0;
  for (bool more = true; more;) {
    for (std::size_t i = 0; i < vars.size(); ++i) point[i] = axes[i][idx[i]];
    ++visited;
    if (program.feasible(point, grid.eps_g)) {
      const double F = program.base.objective.evaluate(point);
      if (F < best_F || (F == best_F && point < best)) {
        best_F = F;
        best = point;
      }
    }
    more = false;
    for (std::size_t i = vars.size(); i-- > 0;) {
      if (++idx[i] < axes[i].size()) {
        more = true;
        break;
      }
      idx[i] = 0;
    }
  }
  report.upper_evals = visited;
  if (!best.empty() || (vars.empty() && best_F < std::numeric_limits<double>::infinity())) {
    report.status = SolveStatus::Optimal;
    report.x.assign(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(program.n_upper));
    report.y.assign(best.begin() + static_cast<std::ptrdiff_t>(program.n_upper), best.end());
    report.F_value = best_F;
    report.f_value = program.lower_objective.evaluate(best);
    report.max_violation = program.base.max_violation(best);
  }
  report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return report;
}

PhiFunction oracle_phi(const BilevelProblem& problem, const GridSpec& grid) {
  return [problem, grid](std::span<const double> x) {
    try {
      return reaction_set(problem, x, grid).phi;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyLowerFeasible) throw;
      return std::numeric_limits<double>::infinity();
    }
  };
}

}  // namespace bileveler
