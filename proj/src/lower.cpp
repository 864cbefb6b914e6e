#include "bileveler/lower.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>

#include "bileveler/error.hpp"
#include "bileveler/simplex.hpp"

namespace bileveler {
namespace {

constexpr double kPsdFloor = -1e-10;

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct LinearLower {
  std::vector<LinearRow> rows;
  std::vector<VarBounds> boxes;
};

LinearLower linear_rows(const BilevelProblem& p, std::span<const double> x) {
  const std::size_t m = p.n_lower();
  LinearLower out;
  for (const Constraint& g : p.lower_constraints) {
    const auto a = instantiate(p, g.expr, x).affine(m);
    if (!a) throw Error(ErrorCode::Structural, "lower constraint '" + g.name + "' is not linear in the lower variables");
    out.rows.push_back({a->coeffs, g.relation == Relation::Equal ? RowRelation::Equal : RowRelation::LessEqual, -a->constant});
  }
  for (const VariableDef& v : p.lower_vars) out.boxes.push_back({v.lower, v.upper});
  return out;
}

void throw_infeasible(std::span<const double> x) {
  std::string at;
  for (double v : x) at += (at.empty() ? "" : ", ") + std::to_string(v);
  throw Error(ErrorCode::LowerInfeasible, "follower has no feasible point at x = (" + at + ")");
}

LowerSolution solve_linear(const BilevelProblem& p, std::span<const double> x, const LowerConfig& config) {
  const std::size_t m = p.n_lower();
  const PolyExpression f = instantiate(p, p.lower_objective, x);
  const auto fa = f.affine(m);
  if (!fa) throw Error(ErrorCode::Structural, "lower objective is not linear in the lower variables");
  LinearLower lin = linear_rows(p, x);
  LinearProgramData lp{fa->coeffs, lin.rows, lin.boxes};
  const LpSolution sol = simplex_solve(lp);
  // Simplex tolerances are looser than eps_g; points the follower can only
  // satisfy within that slack count as infeasible.
  if (sol.status != LpStatus::Optimal || p.lower_violation(x, sol.x) > config.eps_g) throw_infeasible(x);
  LowerSolution out{sol.x, 0.0, SolveStatus::Optimal, sol.pivots};

  if (config.apply_position && m > 0 && !(p.upper_objective == p.lower_objective)) {
    const auto Fa = instantiate(p, p.upper_objective, x).affine(m);
    if (Fa) {
      // Complementary slackness pins down the optimal face exactly: rows
      // with a nonzero multiplier stay tight, priced-out variables stay at
      // their bound.
      LinearProgramData face = lp;
      face.c = Fa->coeffs;
      if (p.position == Position::Pessimistic)
        for (double& c : face.c) c = -c;
      for (std::size_t i = 0; i < face.rows.size(); ++i)
        if (std::abs(sol.row_duals[i]) > 1e-9) face.rows[i].relation = RowRelation::Equal;
      for (std::size_t j = 0; j < m; ++j) {
        if (sol.reduced_costs[j] > 1e-9) face.boxes[j].upper = face.boxes[j].lower;
        if (sol.reduced_costs[j] < -1e-9) face.boxes[j].lower = face.boxes[j].upper;
      }
      const LpSolution sec = simplex_solve(face);
      if (sec.status == LpStatus::Optimal && p.lower_violation(x, sec.x) <= config.eps_g) out.y = sec.x;
    }
  }
  out.f = p.lower_objective.evaluate(p.join(x, out.y));
  return out;
}

// Dykstra's alternating projection onto the lower box and linear rows.
std::vector<double> project(const LinearLower& lin, std::vector<double> y) {
  const std::size_t m = y.size();
  auto clamp = [&](std::vector<double>& v) {
    for (std::size_t j = 0; j < m; ++j) v[j] = std::clamp(v[j], lin.boxes[j].lower, lin.boxes[j].upper);
  };
  if (lin.rows.empty()) {
    clamp(y);
    return y;
  }
  const std::size_t sets = lin.rows.size() + 1;
  std::vector<std::vector<double>> incr(sets, std::vector<double>(m, 0.0));
  for (int sweep = 0; sweep < 5000; ++sweep) {
    double change = 0.0;
    for (std::size_t s = 0; s < sets; ++s) {
      std::vector<double> z(m);
      for (std::size_t j = 0; j < m; ++j) z[j] = y[j] + incr[s][j];
      std::vector<double> pz = z;
      if (s == lin.rows.size()) {
        clamp(pz);
      } else {
        const LinearRow& r = lin.rows[s];
        double dot = 0.0, nn = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          dot += r.coeffs[j] * z[j];
          nn += r.coeffs[j] * r.coeffs[j];
        }
        const double excess = dot - r.rhs;
        if (nn > 0.0 && (r.relation == RowRelation::Equal ? excess != 0.0 : excess > 0.0))
          for (std::size_t j = 0; j < m; ++j) pz[j] -= excess / nn * r.coeffs[j];
      }
      for (std::size_t j = 0; j < m; ++j) {
        incr[s][j] = z[j] - pz[j];
        change = std::max(change, std::abs(pz[j] - y[j]));
      }
      y = pz;
    }
    if (change < 1e-15) break;
  }
  return y;
}

LowerSolution solve_quadratic(const BilevelProblem& p, std::span<const double> x, const LowerConfig& config) {
  const std::size_t m = p.n_lower();
  const PolyExpression f = instantiate(p, p.lower_objective, x);
  DenseMatrix h(m, std::vector<double>(m, 0.0));
  const std::vector<double> origin(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const PolyExpression di = f.derivative(i);
    for (std::size_t j = 0; j < m; ++j) h[i][j] = di.derivative(j).evaluate(origin);
  }
  const double lmax = m == 0 ? 0.0 : symmetric_eigenvalues(h).back();
  if (lmax <= 1e-12) return solve_linear(p, x, config);

  const LinearLower lin = linear_rows(p, x);
  std::vector<double> y(m);
  if (!lin.rows.empty()) {
    const LpSolution start = simplex_solve({std::vector<double>(m, 0.0), lin.rows, lin.boxes});
    if (start.status != LpStatus::Optimal) throw_infeasible(x);
    y = start.x;
  } else {
    for (std::size_t j = 0; j < m; ++j) y[j] = 0.5 * (lin.boxes[j].lower + lin.boxes[j].upper);
  }

  LowerSolution out;
  for (; out.iterations < config.max_iterations; ++out.iterations) {
    const std::vector<double> grad = f.gradient(y);
    std::vector<double> next(m);
    for (std::size_t j = 0; j < m; ++j) next[j] = y[j] - grad[j] / lmax;
    next = project(lin, std::move(next));
    double step = 0.0;
    for (std::size_t j = 0; j < m; ++j) step += (next[j] - y[j]) * (next[j] - y[j]);
    y = std::move(next);
    if (std::sqrt(step) < config.step_tol) break;
  }
  out.status = out.iterations < config.max_iterations ? SolveStatus::Optimal : SolveStatus::Feasible;
  out.y = std::move(y);
  out.f = p.lower_objective.evaluate(p.join(x, out.y));
  return out;
}

LowerSolution solve_blackbox(const BilevelProblem& p, std::span<const double> x, const LowerConfig& config) {
  GAConfig ga = config.ga;
  ga.workers = 1;
  std::uint64_t h = ga.seed;
  for (double v : x) h = splitmix(h ^ std::bit_cast<std::uint64_t>(v));
  ga.seed = h;
  const FitnessFn fitness = [&](std::span<const double> y) {
    const std::vector<double> point = p.join(x, y);
    double penalty = 0.0, worst = 0.0;
    for (const Constraint& g : p.lower_constraints) {
      const double v = g.violation(point);
      penalty += v * v;
      worst = std::max(worst, v);
    }
    const double value = p.lower_objective.evaluate(point) + ga.penalty_coeff * penalty;
    return Fitness{worst > config.eps_g ? Fitness::Penalized : Fitness::Feasible, value};
  };
  const GAResult r = run_ga(p.lower_vars, fitness, ga);
  if (r.best_fitness.feasibility != Fitness::Feasible) throw_infeasible(x);
  LowerSolution out{r.best, 0.0, SolveStatus::Feasible, r.generations_run};
  out.f = p.lower_objective.evaluate(p.join(x, out.y));
  return out;
}

}  // namespace

double lower_infeasibility(const BilevelProblem& problem, std::span<const double> x) {
  const std::size_t m = problem.n_lower();
  LinearLower lin;
  try {
    lin = linear_rows(problem, x);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
  const std::size_t q = lin.rows.size();
  LinearProgramData lp;
  lp.c.assign(m + q, 0.0);
  lp.boxes = lin.boxes;
  for (std::size_t k = 0; k < q; ++k) {
    lp.c[m + k] = 1.0;
    lp.boxes.push_back({0.0, std::numeric_limits<double>::infinity()});
    const LinearRow& r = lin.rows[k];
    LinearRow up{r.coeffs, RowRelation::LessEqual, r.rhs};
    up.coeffs.resize(m + q, 0.0);
    up.coeffs[m + k] = -1.0;
    lp.rows.push_back(up);
    if (r.relation == RowRelation::Equal) {
      LinearRow down{r.coeffs, RowRelation::GreaterEqual, r.rhs};
      down.coeffs.resize(m + q, 0.0);
      down.coeffs[m + k] = 1.0;
      lp.rows.push_back(std::move(down));
    }
  }
  const LpSolution sol = simplex_solve(lp);
  return sol.status == LpStatus::Optimal ? std::max(0.0, sol.objective) : std::numeric_limits<double>::infinity();
}

std::string_view to_string(LowerMode mode) {
  switch (mode) {
    case LowerMode::Linear: return "linear";
    case LowerMode::ConvexQuadratic: return "convex_quadratic";
    case LowerMode::Blackbox: return "blackbox";
  }
  return "unknown";
}

PolyExpression instantiate(const BilevelProblem& problem, const PolyExpression& expr, std::span<const double> x) {
  const std::size_t n = problem.n_upper(), m = problem.n_lower();
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "upper point has the wrong dimension");
  std::vector<std::optional<double>> values(n + m);
  std::vector<std::size_t> index(n + m, 0);
  for (std::size_t i = 0; i < n; ++i) values[i] = x[i];
  for (std::size_t j = 0; j < m; ++j) index[n + j] = j;
  return expr.substitute(values, index);
}

std::vector<std::vector<PolyExpression>> lower_hessian(const BilevelProblem& problem) {
  const std::vector<std::size_t> lower = problem.lower_indices();
  const std::size_t m = lower.size();
  if (problem.lower_objective.degree_in_subset(lower) > 2)
    throw Error(ErrorCode::NonConvexLowerLevel, "lower objective has degree above 2 in the lower variables");
  std::vector<std::vector<PolyExpression>> h(m, std::vector<PolyExpression>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const PolyExpression di = problem.lower_objective.derivative(lower[i]);
    for (std::size_t j = 0; j < m; ++j) h[i][j] = di.derivative(lower[j]);
  }
  return h;
}

bool lower_hessian_psd(const BilevelProblem& problem) {
  const std::vector<std::size_t> lower = problem.lower_indices();
  if (problem.lower_objective.degree_in_subset(lower) > 2) return false;
  const auto h = lower_hessian(problem);
  const std::size_t m = h.size(), n = problem.n_upper();
  std::vector<std::size_t> upper(n);
  for (std::size_t i = 0; i < n; ++i) upper[i] = i;
  bool constant = true;
  for (const auto& row : h)
    for (const PolyExpression& e : row) {
      const int d = e.degree_in_subset(upper);
      if (d > 1) return false;
      constant = constant && e.is_constant();
    }
  if (!constant && n > 20) return false;
  const std::size_t vertices = constant ? 1 : (std::size_t{1} << n);
  std::vector<double> point(problem.dimension(), 0.0);
  for (std::size_t mask = 0; mask < vertices; ++mask) {
    for (std::size_t i = 0; i < n; ++i)
      point[i] = (mask >> i) & 1 ? problem.upper_vars[i].upper : problem.upper_vars[i].lower;
    DenseMatrix a(m, std::vector<double>(m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) a[i][j] = h[i][j].evaluate(point);
    if (m > 0 && symmetric_eigenvalues(a).front() < kPsdFloor) return false;
  }
  return true;
}

LowerMode lower_solver_select(const BilevelProblem& problem) {
  const std::vector<std::size_t> lower = problem.lower_indices();
  const bool rows_linear = std::all_of(problem.lower_constraints.begin(), problem.lower_constraints.end(),
                                       [&](const Constraint& g) { return g.expr.degree_in_subset(lower) <= 1; });
  if (!rows_linear) return LowerMode::Blackbox;
  const int fd = problem.lower_objective.degree_in_subset(lower);
  if (fd <= 1) return LowerMode::Linear;
  if (fd == 2 && lower_hessian_psd(problem)) return LowerMode::ConvexQuadratic;
  return LowerMode::Blackbox;
}

LowerSolution solve_lower(const BilevelProblem& problem, std::span<const double> x, LowerMode mode,
                          const LowerConfig& config) {
  if (x.size() != problem.n_upper()) throw Error(ErrorCode::DimensionMismatch, "upper point has the wrong dimension");
  switch (mode) {
    case LowerMode::Linear: return solve_linear(problem, x, config);
    case LowerMode::ConvexQuadratic: return solve_quadratic(problem, x, config);
    case LowerMode::Blackbox: return solve_blackbox(problem, x, config);
  }
  throw Error(ErrorCode::Structural, "unknown lower mode");
}

}  // namespace bileveler
