#include "bileveler/bobd.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "bileveler/error.hpp"
#include "bileveler/lower.hpp"

namespace bileveler {
namespace {

template <typename Fn>
void for_each_monomial(const SingleLevelProblem& p, Fn&& fn) {
  for (const Monomial& t : p.objective.terms()) fn(t);
  for (const Constraint& c : p.constraints)
    for (const Monomial& t : c.expr.terms()) fn(t);
}

std::string join_names(const SingleLevelProblem& p, const std::vector<std::size_t>& idx) {
  std::string out;
  for (std::size_t i : idx) out += (out.empty() ? "" : ", ") + p.variables[i].name;
  return out;
}

void finish(SolveReport& r, const SingleLevelProblem& p, const VariablePartition& part,
            const std::vector<double>& u, const std::vector<double>& l) {
  r.x = part.to_original(u, l);
  r.y.clear();
  r.F_value = p.objective.evaluate(r.x);
  r.f_value = r.F_value;
  r.max_violation = p.max_violation(r.x);
}

}  // namespace

VariablePartition VariablePartition::from_lists(std::vector<std::size_t> upper, std::vector<std::size_t> lower) {
  VariablePartition out{std::move(upper), std::move(lower), {}};
  const std::size_t n = out.upper.size() + out.lower.size();
  out.index_map.assign(n, {Level::Upper, 0});
  for (std::size_t k = 0; k < out.upper.size(); ++k)
    if (out.upper[k] < n) out.index_map[out.upper[k]] = {Level::Upper, k};
  for (std::size_t k = 0; k < out.lower.size(); ++k)
    if (out.lower[k] < n) out.index_map[out.lower[k]] = {Level::Lower, k};
  return out;
}

void VariablePartition::validate(std::size_t n) const {
  if (upper.size() + lower.size() != n || index_map.size() != n)
    throw Error(ErrorCode::InvalidPartition, "partition does not cover every variable exactly once");
  std::vector<int> seen(n, 0);
  for (std::size_t k = 0; k < upper.size(); ++k) {
    if (upper[k] >= n || seen[upper[k]]++) throw Error(ErrorCode::InvalidPartition, "bad upper index");
    if (index_map[upper[k]] != std::pair{Level::Upper, k}) throw Error(ErrorCode::InvalidPartition, "index map disagrees");
  }
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (lower[k] >= n || seen[lower[k]]++) throw Error(ErrorCode::InvalidPartition, "bad lower index");
    if (index_map[lower[k]] != std::pair{Level::Lower, k}) throw Error(ErrorCode::InvalidPartition, "index map disagrees");
  }
}

std::string VariablePartition::describe(const SingleLevelProblem& problem) const {
  return "upper: " + join_names(problem, upper) + " | lower: " + join_names(problem, lower);
}

std::vector<double> VariablePartition::to_decomposed(const std::vector<double>& original) const {
  std::vector<double> out(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto [level, pos] = index_map[i];
    out[level == Level::Upper ? pos : upper.size() + pos] = original[i];
  }
  return out;
}

std::vector<double> VariablePartition::to_original(const std::vector<double>& upper_part,
                                                   const std::vector<double>& lower_part) const {
  std::vector<double> out(index_map.size());
  for (std::size_t i = 0; i < index_map.size(); ++i) {
    const auto [level, pos] = index_map[i];
    out[i] = level == Level::Upper ? upper_part[pos] : lower_part[pos];
  }
  return out;
}

VariablePartition classify_variables(const SingleLevelProblem& problem) {
  problem.validate();
  const std::size_t n = problem.dimension();
  std::vector<bool> up(n, false);
  for (std::size_t v = 0; v < n; ++v) {
    const VariableProfile prof = variable_profile(problem, v);
    up[v] = prof.max_power > 1 || prof.in_abs;
  }
  for (;;) {
    std::vector<std::size_t> count(n, 0);
    bool coupled = false;
    for_each_monomial(problem, [&](const Monomial& t) {
      std::size_t lows = 0;
      for (const Factor& f : t.factors) lows += up[f.var] ? 0 : 1;
      if (lows < 2) return;
      coupled = true;
      for (const Factor& f : t.factors)
        if (!up[f.var]) ++count[f.var];
    });
    if (!coupled) break;
    up[static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin())] = true;
  }
  std::vector<std::size_t> upper, lower;
  for (std::size_t v = 0; v < n; ++v) (up[v] ? upper : lower).push_back(v);
  return VariablePartition::from_lists(std::move(upper), std::move(lower));
}

BilevelProblem decompose(const SingleLevelProblem& problem, const VariablePartition& partition) {
  problem.validate();
  partition.validate(problem.dimension());
  std::vector<std::size_t> index(problem.dimension());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto [level, pos] = partition.index_map[i];
    index[i] = level == Level::Upper ? pos : partition.upper.size() + pos;
  }
  BilevelProblem out;
  for (std::size_t i : partition.upper) out.upper_vars.push_back(problem.variables[i]);
  for (std::size_t i : partition.lower) out.lower_vars.push_back(problem.variables[i]);
  out.upper_objective = problem.objective.remap(index);
  out.lower_objective = out.upper_objective;
  for (const Constraint& c : problem.constraints) {
    const bool has_lower = std::any_of(partition.lower.begin(), partition.lower.end(),
                                       [&](std::size_t v) { return c.expr.degree_in(v) > 0; });
    Constraint moved{c.expr.remap(index), c.relation, c.name};
    (has_lower ? out.lower_constraints : out.upper_constraints).push_back(std::move(moved));
  }
  out.position = Position::Optimistic;
  out.validate();
  return out;
}

SolveReport bobd_solve(const SingleLevelProblem& problem, const GAConfig& ga, const GridSpec& grid_fallback) {
  const auto start = std::chrono::steady_clock::now();
  const VariablePartition part = classify_variables(problem);
  const BilevelProblem bi = decompose(problem, part);
  SolveReport r;

  if (part.upper.empty()) {
    r.method = "bobd";
    r.seed = ga.seed;
    r.lower_solves = 1;
    r.diagnostics["generations"] = 0;
    try {
      const LowerSolution low = solve_lower(bi, {}, LowerMode::Linear);
      finish(r, problem, part, {}, low.y);
      r.status = SolveStatus::Optimal;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LowerInfeasible) throw;
      r.status = SolveStatus::Infeasible;
    }
  } else {
    r = nested_ga_solve(bi, ga, LowerMode::Linear);
    r.method = "bobd";
    std::erase_if(r.flags, [](const std::string& f) { return f.rfind("lower=", 0) == 0; });
    if (part.all_upper()) r.flags.push_back("all-upper");
    if (r.x.size() == part.upper.size() && r.y.size() == part.lower.size()) finish(r, problem, part, r.x, r.y);
    if (r.status == SolveStatus::Infeasible) {
      double nominal = 1.0;
      for (const VariableDef& v : problem.variables) nominal *= static_cast<double>(grid_axis(v, grid_fallback.points_per_axis).size());
      if (nominal <= grid_fallback.max_points) {
        const SolveReport g = solve_single_grid(problem, grid_fallback);
        if (g.succeeded()) {
          r.x = g.x;
          r.F_value = r.f_value = g.F_value;
          r.max_violation = g.max_violation;
          r.status = SolveStatus::Feasible;
          r.flags.push_back("grid-fallback");
        }
      }
    }
  }
  r.flags.insert(r.flags.begin(), "partition=" + part.describe(problem));
  r.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SolveReport pure_ga_solve(const SingleLevelProblem& problem, const GAConfig& ga) {
  std::vector<std::size_t> all(problem.dimension());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const VariablePartition part = VariablePartition::from_lists(all, {});
  SolveReport r = nested_ga_solve(decompose(problem, part), ga, LowerMode::Linear);
  r.method = "pure-ga";
  r.flags.clear();
  if (r.x.size() == all.size()) finish(r, problem, part, r.x, {});
  return r;
}

}  // namespace bileveler
