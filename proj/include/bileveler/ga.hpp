#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bileveler/problem.hpp"
#include "bileveler/report.hpp"

namespace bileveler {

struct GAConfig {
  std::size_t population = 50;
  std::size_t generations = 200;
  double crossover_prob = 0.9;
  std::optional<double> mutation_prob;  // unset: 1/n
  double penalty_coeff = 1e6;
  std::uint64_t seed = 0;
  double eta_crossover = 15.0;
  double eta_mutation = 20.0;
  double eps_g = 1e-9;
  // 0 means no limit; otherwise the run stops before exceeding this many
  // fitness evaluations and reports budget_exceeded.
  std::uint64_t max_evaluations = 0;
  std::size_t workers = 1;
  // Compass-search evaluations spent refining the best individual after the
  // last generation; counted like any other evaluation.
  std::size_t polish_evaluations = 200;

  void validate() const;
};

// Smaller classes always win; values compare within a class. Lower-infeasible
// individuals carry the follower's least constraint violation as value.
struct Fitness {
  enum Class { Feasible = 0, Penalized = 1, LowerInfeasible = 2 };
  Class feasibility = Feasible;
  double value = 0.0;
};

bool better(const Fitness& a, const Fitness& b);

struct GAResult {
  std::vector<double> best;
  Fitness best_fitness{Fitness::LowerInfeasible, 0.0};
  std::uint64_t evaluations = 0;
  std::size_t generations_run = 0;
  bool budget_hit = false;
  std::vector<std::vector<double>> final_population;
};

using FitnessFn = std::function<Fitness(std::span<const double>)>;

// Real-coded GA: binary tournaments, SBX, polynomial mutation and
// (mu + lambda) survival, followed by a compass-search polish. fitness must be pure; it may be called from
// several threads when workers > 1.
GAResult run_ga(const std::vector<VariableDef>& vars, const FitnessFn& fitness, const GAConfig& config,
                const std::vector<std::vector<double>>& initial = {});

enum class LowerMode;

// Evolutionary search over the upper variables with the follower solved for
// every candidate. The lower mode defaults to lower_solver_select.
SolveReport nested_ga_solve(const BilevelProblem& problem, const GAConfig& ga,
                            std::optional<LowerMode> mode = std::nullopt);

}  // namespace bileveler
