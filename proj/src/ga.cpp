#include "bileveler/ga.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "bileveler/error.hpp"
#include "bileveler/lower.hpp"

namespace bileveler {
namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

void sbx(std::vector<double>& a, std::vector<double>& b, const std::vector<VariableDef>& vars, double eta, Rng& rng) {
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (rng.uniform() > 0.5) continue;
    const double lo = vars[i].lower, hi = vars[i].upper;
    if (std::abs(a[i] - b[i]) <= 1e-14 || hi <= lo) continue;
    const double y1 = std::min(a[i], b[i]), y2 = std::max(a[i], b[i]);
    const double u = rng.uniform();
    auto spread = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
      return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                              : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
    };
    double c1 = 0.5 * ((y1 + y2) - spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1)) * (y2 - y1));
    double c2 = 0.5 * ((y1 + y2) + spread(1.0 + 2.0 * (hi - y2) / (y2 - y1)) * (y2 - y1));
    c1 = std::clamp(c1, lo, hi);
    c2 = std::clamp(c2, lo, hi);
    if (rng.uniform() <= 0.5) std::swap(c1, c2);
    a[i] = c1;
    b[i] = c2;
  }
}

void mutate(std::vector<double>& v, const std::vector<VariableDef>& vars, double prob, double eta, Rng& rng) {
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (rng.uniform() > prob) continue;
    const double lo = vars[i].lower, hi = vars[i].upper;
    if (hi <= lo) continue;
    const double d1 = (v[i] - lo) / (hi - lo), d2 = (hi - v[i]) / (hi - lo);
    const double u = rng.uniform(), power = 1.0 / (eta + 1.0);
    double dq;
    if (u < 0.5) {
      const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
      dq = std::pow(val, power) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
      dq = 1.0 - std::pow(val, power);
    }
    v[i] = std::clamp(v[i] + dq * (hi - lo), lo, hi);
  }
}

std::vector<Fitness> evaluate_all(const std::vector<std::vector<double>>& pop, const FitnessFn& fitness,
                                  std::size_t workers) {
  std::vector<Fitness> out(pop.size());
  workers = std::max<std::size_t>(1, std::min(workers, pop.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < pop.size(); ++i) out[i] = fitness(pop[i]);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w)
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < pop.size(); i += workers) out[i] = fitness(pop[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace

void GAConfig::validate() const {
  if (population < 2 || population % 2 != 0) throw Error(ErrorCode::Structural, "population must be even and at least 2");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) throw Error(ErrorCode::Structural, "crossover_prob outside [0,1]");
  if (mutation_prob && !(*mutation_prob >= 0.0 && *mutation_prob <= 1.0))
    throw Error(ErrorCode::Structural, "mutation_prob outside [0,1]");
  if (!(penalty_coeff >= 0.0)) throw Error(ErrorCode::Structural, "penalty_coeff must be nonnegative");
}

bool better(const Fitness& a, const Fitness& b) {
  if (a.feasibility != b.feasibility) return a.feasibility < b.feasibility;
  return a.value < b.value;
}

GAResult run_ga(const std::vector<VariableDef>& vars, const FitnessFn& fitness, const GAConfig& config,
                const std::vector<std::vector<double>>& initial) {
  config.validate();
  const std::size_t n = vars.size(), N = config.population;
  const double pm = config.mutation_prob.value_or(n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
  Rng rng(config.seed);
  GAResult result;

  auto allowed = [&](std::size_t batch) {
    return config.max_evaluations == 0 || result.evaluations + batch <= config.max_evaluations;
  };
  auto record = [&](const std::vector<std::vector<double>>& pop, const std::vector<Fitness>& fit) {
    for (std::size_t i = 0; i < pop.size(); ++i)
      if ((result.evaluations == 0 && i == 0) || better(fit[i], result.best_fitness)) {
        result.best = pop[i];
        result.best_fitness = fit[i];
      }
    result.evaluations += pop.size();
  };

  std::vector<std::vector<double>> pop = initial;
  pop.resize(std::min(pop.size(), N));
  while (pop.size() < N) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = vars[i].lower + rng.uniform() * (vars[i].upper - vars[i].lower);
    pop.push_back(std::move(v));
  }
  if (!allowed(N)) {
    result.budget_hit = true;
    return result;
  }
  // A problem without decision variables has a single candidate.
  if (n == 0) {
    pop.resize(1);
    record(pop, evaluate_all(pop, fitness, 1));
    result.final_population = pop;
    return result;
  }
  std::vector<Fitness> fit = evaluate_all(pop, fitness, config.workers);
  record(pop, fit);

  auto tournament = [&] {
    const std::size_t a = rng.index(N), b = rng.index(N);
    return better(fit[b], fit[a]) ? b : a;
  };
  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    if (!allowed(N)) {
      result.budget_hit = true;
      break;
    }
    std::vector<std::vector<double>> kids;
    kids.reserve(N);
    while (kids.size() < N) {
      std::vector<double> a = pop[tournament()], b = pop[tournament()];
      if (rng.uniform() <= config.crossover_prob) sbx(a, b, vars, config.eta_crossover, rng);
      mutate(a, vars, pm, config.eta_mutation, rng);
      mutate(b, vars, pm, config.eta_mutation, rng);
      kids.push_back(std::move(a));
      kids.push_back(std::move(b));
    }
    const std::vector<Fitness> kid_fit = evaluate_all(kids, fitness, config.workers);
    record(kids, kid_fit);

    std::vector<std::size_t> order(2 * N);
    std::iota(order.begin(), order.end(), 0);
    auto fit_of = [&](std::size_t k) -> const Fitness& { return k < N ? fit[k] : kid_fit[k - N]; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return better(fit_of(a), fit_of(b)); });
    std::vector<std::vector<double>> next;
    std::vector<Fitness> next_fit;
    for (std::size_t k = 0; k < N; ++k) {
      next.push_back(order[k] < N ? pop[order[k]] : kids[order[k] - N]);
      next_fit.push_back(fit_of(order[k]));
    }
    pop = std::move(next);
    fit = std::move(next_fit);
    ++result.generations_run;
  }
  result.final_population = std::move(pop);

  std::vector<double> step(n);
  for (std::size_t i = 0; i < n; ++i) step[i] = 0.05 * (vars[i].upper - vars[i].lower);
  std::size_t spent = 0;
  while (spent < config.polish_evaluations && !result.budget_hit) {
    bool improved = false, any_step = false;
    for (std::size_t i = 0; i < n && !improved && spent < config.polish_evaluations; ++i) {
      if (step[i] <= 1e-13 * (vars[i].upper - vars[i].lower)) continue;
      any_step = true;
      for (double dir : {1.0, -1.0}) {
        std::vector<double> cand = result.best;
        cand[i] = std::clamp(cand[i] + dir * step[i], vars[i].lower, vars[i].upper);
        if (cand[i] == result.best[i]) continue;
        if (!allowed(1) || spent >= config.polish_evaluations) break;
        const Fitness f = fitness(cand);
        ++result.evaluations;
        ++spent;
        if (better(f, result.best_fitness)) {
          result.best = std::move(cand);
          result.best_fitness = f;
          improved = true;
          break;
        }
      }
    }
    if (!any_step) break;
    if (!improved)
      for (double& s : step) s *= 0.5;
  }
  return result;
}

SolveReport nested_ga_solve(const BilevelProblem& problem, const GAConfig& ga, std::optional<LowerMode> mode) {
  const auto start = std::chrono::steady_clock::now();
  problem.validate();
  const LowerMode lower_mode = mode.value_or(lower_solver_select(problem));
  LowerConfig lcfg;
  lcfg.eps_g = ga.eps_g;
  lcfg.ga.seed = ga.seed;

  const FitnessFn fitness = [&](std::span<const double> x) {
    LowerSolution low;
    try {
      low = solve_lower(problem, x, lower_mode, lcfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LowerInfeasible) throw;
      return Fitness{Fitness::LowerInfeasible, lower_infeasibility(problem, x)};
    }
    const std::vector<double> point = problem.join(x, low.y);
    double penalty = 0.0, worst = 0.0;
    for (const Constraint& G : problem.upper_constraints) {
      const double v = G.violation(point);
      penalty += v * v;
      worst = std::max(worst, v);
    }
    const double value = problem.upper_objective.evaluate(point) + ga.penalty_coeff * penalty;
    return Fitness{worst > ga.eps_g ? Fitness::Penalized : Fitness::Feasible, value};
  };

  const GAResult r = run_ga(problem.upper_vars, fitness, ga);

  SolveReport report;
  report.method = "nested-ga";
  report.seed = ga.seed;
  report.upper_evals = r.evaluations;
  report.lower_solves = r.evaluations;
  report.diagnostics["generations"] = static_cast<std::int64_t>(r.generations_run);
  report.flags.push_back("lower=" + std::string(to_string(lower_mode)));
  if (r.evaluations > 0) {
    report.x = r.best;
    if (r.best_fitness.feasibility != Fitness::LowerInfeasible) {
      LowerSolution low = solve_lower(problem, report.x, lower_mode, lcfg);
      report.y = std::move(low.y);
      const std::vector<double> point = problem.join(report.x, report.y);
      report.F_value = problem.upper_objective.evaluate(point);
      report.f_value = problem.lower_objective.evaluate(point);
      report.max_violation =
          std::max(problem.upper_violation(report.x, report.y), problem.lower_violation(report.x, report.y));
    }
  }
  if (r.budget_hit)
    report.status = SolveStatus::BudgetExceeded;
  else if (r.best_fitness.feasibility == Fitness::Feasible && report.max_violation <= ga.eps_g)
    report.status = SolveStatus::Feasible;
  else
    report.status = SolveStatus::Infeasible;
  report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace bileveler
