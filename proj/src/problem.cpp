#include "bileveler/problem.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "bileveler/error.hpp"

namespace bileveler {
namespace {

void validate_vars(const std::vector<VariableDef>& vars, std::unordered_set<std::string>& seen) {
  for (const VariableDef& v : vars) {
    if (v.name.empty()) throw Error(ErrorCode::Structural, "variable with empty name");
    if (!std::isfinite(v.lower) || !std::isfinite(v.upper))
      throw Error(ErrorCode::UnboundedVariable, "variable '" + v.name + "' must have finite bounds");
    if (v.lower > v.upper)
      throw Error(ErrorCode::Structural, "variable '" + v.name + "' has lower > upper");
    if (!seen.insert(v.name).second)
      throw Error(ErrorCode::DuplicateName, "variable '" + v.name + "' declared twice");
  }
}

void check_range(const PolyExpression& e, std::size_t dim, const char* what) {
  if (e.min_dimension() > dim)
    throw Error(ErrorCode::Structural,
                std::string(what) + " references variable index beyond " + std::to_string(dim));
}

}  // namespace

double Constraint::violation(std::span<const double> point) const {
  double v = expr.evaluate(point);
  return relation == Relation::Equal ? std::abs(v) : std::max(0.0, v);
}

double box_violation(const VariableDef& v, double value) {
  return std::max({0.0, v.lower - value, value - v.upper});
}

void SingleLevelProblem::validate() const {
  std::unordered_set<std::string> seen;
  validate_vars(variables, seen);
  check_range(objective, dimension(), "objective");
  for (const Constraint& c : constraints) check_range(c.expr, dimension(), "constraint");
}

double SingleLevelProblem::max_violation(std::span<const double> point) const {
  if (point.size() != dimension())
    throw Error(ErrorCode::DimensionMismatch, "point dimension does not match problem");
  double worst = 0.0;
  for (std::size_t i = 0; i < variables.size(); ++i)
    worst = std::max(worst, box_violation(variables[i], point[i]));
  for (const Constraint& c : constraints) worst = std::max(worst, c.violation(point));
  return worst;
}

std::vector<std::size_t> BilevelProblem::lower_indices() const {
  std::vector<std::size_t> idx(n_lower());
  for (std::size_t j = 0; j < n_lower(); ++j) idx[j] = n_upper() + j;
  return idx;
}

std::vector<VariableDef> BilevelProblem::all_vars() const {
  std::vector<VariableDef> vars = upper_vars;
  vars.insert(vars.end(), lower_vars.begin(), lower_vars.end());
  return vars;
}

std::vector<double> BilevelProblem::join(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != n_upper() || y.size() != n_lower())
    throw Error(ErrorCode::DimensionMismatch, "(x, y) dimensions do not match problem");
  std::vector<double> point(x.begin(), x.end());
  point.insert(point.end(), y.begin(), y.end());
  return point;
}

void BilevelProblem::validate() const {
  std::unordered_set<std::string> seen;
  validate_vars(upper_vars, seen);
  validate_vars(lower_vars, seen);
  const std::size_t dim = dimension();
  check_range(upper_objective, dim, "upper objective");
  check_range(lower_objective, dim, "lower objective");
  for (const Constraint& c : upper_constraints) check_range(c.expr, dim, "upper constraint");
  for (const Constraint& c : lower_constraints) check_range(c.expr, dim, "lower constraint");
}

double BilevelProblem::upper_violation(std::span<const double> x, std::span<const double> y) const {
  std::vector<double> point = join(x, y);
  double worst = 0.0;
  for (std::size_t i = 0; i < n_upper(); ++i) worst = std::max(worst, box_violation(upper_vars[i], x[i]));
  for (const Constraint& c : upper_constraints) worst = std::max(worst, c.violation(point));
  return worst;
}

double BilevelProblem::lower_violation(std::span<const double> x, std::span<const double> y) const {
  std::vector<double> point = join(x, y);
  double worst = 0.0;
  for (std::size_t j = 0; j < n_lower(); ++j) worst = std::max(worst, box_violation(lower_vars[j], y[j]));
  for (const Constraint& c : lower_constraints) worst = std::max(worst, c.violation(point));
  return worst;
}

VariableProfile variable_profile(const SingleLevelProblem& problem, std::size_t var) {
  if (var >= problem.dimension())
    throw Error(ErrorCode::DimensionMismatch, "variable index " + std::to_string(var) + " out of range");
  VariableProfile profile;
  auto scan = [&](const PolyExpression& e) {
    for (const Monomial& m : e.terms()) {
      int p = m.power_of(var);
      if (p == 0) continue;
      profile.max_power = std::max(profile.max_power, p);
      if (m.modifier == Modifier::Abs) profile.in_abs = true;
      for (const Factor& f : m.factors)
        if (f.var != var) profile.coupled_partners.insert(f.var);
    }
  };
  scan(problem.objective);
  for (const Constraint& c : problem.constraints) scan(c.expr);
  return profile;
}

}  // namespace bileveler
