#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bileveler/expression.hpp"

namespace bileveler {

struct VariableDef {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;

  friend bool operator==(const VariableDef&, const VariableDef&) = default;
};

enum class Relation { LessEqual, Equal };

// expr <= 0 or expr == 0. Greater-or-equal inputs are negated at parse time.
struct Constraint {
  PolyExpression expr;
  Relation relation = Relation::LessEqual;
  std::string name;

  // Nonnegative violation: max(0, expr) for <=, |expr| for ==.
  double violation(std::span<const double> point) const;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

enum class Position { Optimistic, Pessimistic };

struct SingleLevelProblem {
  std::vector<VariableDef> variables;
  PolyExpression objective;
  std::vector<Constraint> constraints;

  std::size_t dimension() const { return variables.size(); }

  // Throws on bad bounds, duplicate names or out-of-range variable indices.
  void validate() const;

  // Largest constraint violation at point, including box bounds.
  double max_violation(std::span<const double> point) const;

  friend bool operator==(const SingleLevelProblem&, const SingleLevelProblem&) = default;
};

// Expressions index into the concatenated (upper, lower) variable vector.
struct BilevelProblem {
  std::vector<VariableDef> upper_vars;
  std::vector<VariableDef> lower_vars;
  PolyExpression upper_objective;  // F
  PolyExpression lower_objective;  // f
  std::vector<Constraint> upper_constraints;  // G
  std::vector<Constraint> lower_constraints;  // g
  Position position = Position::Optimistic;

  std::size_t n_upper() const { return upper_vars.size(); }
  std::size_t n_lower() const { return lower_vars.size(); }
  std::size_t dimension() const { return n_upper() + n_lower(); }
  std::vector<std::size_t> lower_indices() const;
  std::vector<VariableDef> all_vars() const;
  std::vector<double> join(std::span<const double> x, std::span<const double> y) const;

  void validate() const;

  // Violations over G plus upper boxes, and over g plus lower boxes.
  double upper_violation(std::span<const double> x, std::span<const double> y) const;
  double lower_violation(std::span<const double> x, std::span<const double> y) const;

  friend bool operator==(const BilevelProblem&, const BilevelProblem&) = default;
};

struct VariableProfile {
  int max_power = 0;
  bool in_abs = false;
  std::set<std::size_t> coupled_partners;

  friend bool operator==(const VariableProfile&, const VariableProfile&) = default;
};

// Structural footprint of one variable across objective and constraints.
VariableProfile variable_profile(const SingleLevelProblem& problem, std::size_t var);

// Box violation of a single coordinate.
double box_violation(const VariableDef& v, double value);

}  // namespace bileveler
