#include "bileveler/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bileveler/bnb.hpp"
#include "bileveler/bobd.hpp"
#include "bileveler/error.hpp"
#include "bileveler/fixtures.hpp"
#include "bileveler/ga.hpp"
#include "bileveler/oracle.hpp"
#include "bileveler/problem_io.hpp"
#include "bileveler/reduce.hpp"
#include "bileveler/report_io.hpp"

namespace bileveler {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string file;
  std::string method;
  std::string position;
  std::size_t grid = 101;
  std::uint64_t seed = 0;
  std::optional<double> budget;
  std::string out = "text";
  std::size_t workers = 1;
  std::size_t population = 50;
  std::size_t generations = 200;
  std::string output;
  double lambda_max = 1e6;
  std::string suite;
  std::string sizes = "default";
  std::size_t seeds = 11;
};

std::optional<double> budget_of(const Options& o) {
  if (o.budget) return o.budget;
  if (const char* env = std::getenv("BILEVELER_BUDGET")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0)) throw UsageError("BILEVELER_BUDGET must be a positive number");
    return v;
  }
  return std::nullopt;
}

std::string resolve(const std::string& path) {
  if (std::filesystem::exists(path) || !std::filesystem::exists(path + ".json")) return path;
  return path + ".json";
}

GAConfig ga_of(const Options& o) {
  GAConfig ga;
  ga.seed = o.seed;
  ga.workers = o.workers;
  ga.population = o.population;
  ga.generations = o.generations;
  if (auto b = budget_of(o)) ga.max_evaluations = static_cast<std::uint64_t>(*b);
  return ga;
}

GridSpec grid_of(const Options& o) {
  GridSpec g;
  g.points_per_axis = o.grid;
  g.workers = o.workers;
  if (auto b = budget_of(o)) g.max_points = *b;
  return g;
}

BnbOptions bnb_of(const Options& o) {
  BnbOptions b;
  if (auto v = budget_of(o)) b.node_limit = static_cast<std::uint64_t>(*v);
  return b;
}

int exit_for(const SolveReport& r) {
  switch (r.status) {
    case SolveStatus::Optimal:
    case SolveStatus::Feasible: return kExitOk;
    case SolveStatus::Infeasible: return kExitInfeasible;
    case SolveStatus::BudgetExceeded: return kExitBudget;
  }
  return kExitUsage;
}

std::vector<std::string> names(const std::vector<VariableDef>& vars, std::size_t from, std::size_t to) {
  std::vector<std::string> out;
  for (std::size_t i = from; i < to; ++i) out.push_back(vars[i].name);
  return out;
}

void emit(std::ostream& out, const Options& o, const SolveReport& r, const std::vector<std::string>& xn,
          const std::vector<std::string>& yn, std::vector<std::pair<std::string, std::string>> context) {
  if (o.out == "machine") {
    const std::string line = report_record(r, context);
    if (const std::string bad = check_report_record(line); !bad.empty())
      throw std::logic_error("machine record failed its schema check: " + bad);
    out << line << "\n";
  } else {
    out << report_text(r, xn, yn);
  }
}

void check_out(const Options& o) {
  if (o.out != "text" && o.out != "machine") throw UsageError("--out must be text or machine");
}

int cmd_solve(const Options& o, std::ostream& out, bool oracle_only) {
  check_out(o);
  AnyProblem problem = parse_problem_file(resolve(o.file));
  std::string method = oracle_only ? "oracle" : o.method;
  const std::vector<std::pair<std::string, std::string>> ctx{{"command", oracle_only ? "oracle" : "solve"},
                                                             {"problem", o.file}};

  if (auto* s = std::get_if<SingleLevelProblem>(&problem)) {
    if (method.empty()) method = "bobd";
    SolveReport r;
    if (method == "bobd") {
      r = bobd_solve(*s, ga_of(o), grid_of(o));
    } else if (method == "nested-ga") {
      r = pure_ga_solve(*s, ga_of(o));
    } else if (method == "oracle") {
      r = solve_single_grid(*s, grid_of(o));
    } else if (method == "kkt-bnb") {
      throw UsageError("kkt-bnb needs a bilevel or mpec problem file");
    } else {
      throw UsageError("unknown method '" + method + "'");
    }
    emit(out, o, r, names(s->variables, 0, s->dimension()), {}, ctx);
    return exit_for(r);
  }

  if (auto* m = std::get_if<MpecProblem>(&problem)) {
    if (method.empty()) method = "kkt-bnb";
    if (method != "kkt-bnb") throw UsageError("mpec files are solved with kkt-bnb only");
    const SolveReport r = mpec_branch_and_bound(*m, bnb_of(o));
    const auto& v = m->base.variables;
    emit(out, o, r, names(v, 0, m->n_upper), names(v, m->n_upper, m->n_upper + m->n_lower), ctx);
    return exit_for(r);
  }

  BilevelProblem& b = std::get<BilevelProblem>(problem);
  if (method.empty()) method = "nested-ga";
  if (!o.position.empty()) {
    if (o.position == "optimistic") {
      b.position = Position::Optimistic;
    } else if (o.position == "pessimistic") {
      b.position = Position::Pessimistic;
    } else {
      throw UsageError("--position must be optimistic or pessimistic");
    }
  }
  SolveReport r;
  if (method == "oracle") {
    r = solve_bilevel_grid(b, grid_of(o));
  } else if (method == "nested-ga") {
    r = nested_ga_solve(b, ga_of(o));
  } else if (method == "kkt-bnb") {
    if (b.position == Position::Pessimistic)
      throw UsageError(
          "kkt-bnb supports only the optimistic position: replacing the follower by its KKT conditions lets the "
          "leader pick among tied follower optima, which is the optimistic choice");
    r = mpec_branch_and_bound(kkt_reduce(b), bnb_of(o));
  } else if (method == "bobd") {
    throw UsageError("bobd decomposes single-level problems; this file is already bilevel");
  } else {
    throw UsageError("unknown method '" + method + "'");
  }
  const std::vector<VariableDef> all = b.all_vars();
  emit(out, o, r, names(all, 0, b.n_upper()), names(all, b.n_upper(), all.size()), ctx);
  return exit_for(r);
}

int cmd_reduce(const Options& o, std::ostream& out) {
  AnyProblem problem = parse_problem_file(resolve(o.file));
  auto* b = std::get_if<BilevelProblem>(&problem);
  if (!b) throw UsageError("reduce needs a bilevel problem file");
  if (!o.position.empty()) b->position = o.position == "pessimistic" ? Position::Pessimistic : Position::Optimistic;
  KktOptions opt;
  opt.lambda_max = o.lambda_max;
  const std::string text = serialize_problem(kkt_reduce(*b, opt));
  if (o.output.empty()) {
    out << text;
  } else {
    std::ofstream f(o.output);
    if (!f) throw UsageError("cannot write " + o.output);
    f << text;
  }
  return kExitOk;
}

int cmd_classify(const Options& o, std::ostream& out) {
  const AnyProblem problem = parse_problem_file(resolve(o.file));
  const auto* s = std::get_if<SingleLevelProblem>(&problem);
  if (!s) throw UsageError("classify needs a single-level problem file");
  const VariablePartition part = classify_variables(*s);
  out << part.describe(*s) << "\n";
  if (part.all_upper()) out << "warning: every variable is complexity-causing; bobd runs as a pure GA\n";
  return kExitOk;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_bench(const Options& o, std::ostream& out) {
  check_out(o);
  std::vector<std::size_t> sizes;
  if (o.suite == "scal") {
    sizes = {4, 10, 30};
  } else if (o.suite == "randlin") {
    sizes = {1, 2, 3, 4, 5};
  } else {
    throw UsageError("unknown suite '" + o.suite + "' (expected scal or randlin)");
  }
  if (o.sizes != "default") {
    sizes.clear();
    std::stringstream ss(o.sizes);
    for (std::string tok; std::getline(ss, tok, ',');) {
      if (tok.empty()) continue;
      try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        sizes.push_back(v);
      } catch (const std::exception&) {
        throw UsageError("--sizes expects a comma-separated list of integers");
      }
    }
  }

  struct Row {
    std::string instance, method;
    std::vector<double> values;
    std::vector<double> evals;
    std::int64_t wall = 0;
    std::size_t runs = 0;
  };
  std::vector<Row> rows;
  Options run = o;
  for (std::size_t n : sizes) {
    std::vector<std::string> methods;
    std::function<SolveReport(const std::string&, std::uint64_t)> solve;
    std::string instance;
    if (o.suite == "scal") {
      if (n < 2) throw UsageError("scal sizes must be at least 2");
      const SingleLevelProblem p = fixtures::scal(n, fixtures::scal_default_k(n));
      instance = "scal-" + std::to_string(n);
      methods = {"bobd"};
      const double nominal = std::pow(static_cast<double>(o.grid), static_cast<double>(n));
      if (nominal <= grid_of(o).max_points) methods.push_back("oracle");
      methods.push_back("pure-ga");
      solve = [p, &run, this_grid = grid_of(o)](const std::string& m, std::uint64_t seed) {
        run.seed = seed;
        if (m == "bobd") return bobd_solve(p, ga_of(run), this_grid);
        if (m == "pure-ga") return pure_ga_solve(p, ga_of(run));
        return solve_single_grid(p, this_grid);
      };
    } else {
      const BilevelProblem p = fixtures::randlin(n);
      instance = "randlin-" + std::to_string(n);
      methods = {"kkt-bnb", "nested-ga", "oracle"};
      solve = [p, &run, &o](const std::string& m, std::uint64_t seed) {
        run.seed = seed;
        if (m == "kkt-bnb") return mpec_branch_and_bound(kkt_reduce(p), bnb_of(o));
        if (m == "nested-ga") return nested_ga_solve(p, ga_of(run));
        return solve_bilevel_grid(p, grid_of(o));
      };
    }
    for (const std::string& m : methods) {
      Row row{instance, m, {}, {}, 0, 0};
      // Deterministic methods run once.
      const std::size_t seeds = (m == "oracle" || m == "kkt-bnb") ? 1 : o.seeds;
      for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
        const SolveReport r = solve(m, seed);
        ++row.runs;
        row.wall += r.wall_ms;
        row.evals.push_back(static_cast<double>(r.upper_evals));
        if (r.succeeded()) row.values.push_back(r.F_value);
        if (o.out == "machine") {
          const std::string line = report_record(r, {{"command", "bench"}, {"suite", o.suite}, {"instance", instance}});
          if (const std::string bad = check_report_record(line); !bad.empty())
            throw std::logic_error("machine record failed its schema check: " + bad);
          out << line << "\n";
        }
      }
      rows.push_back(std::move(row));
    }
  }
  if (o.out == "machine") return kExitOk;

  out << "suite " << o.suite << ", " << o.seeds << " seeds\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-10s %14s %14s %12s %10s %8s\n", "instance", "method", "median F", "best F",
                "median evals", "wall ms", "solved");
  out << buf;
  for (const Row& r : rows) {
    std::string med = "-", best = "-";
    if (!r.values.empty()) {
      std::snprintf(buf, sizeof buf, "%.6g", median(r.values));
      med = buf;
      std::snprintf(buf, sizeof buf, "%.6g", *std::min_element(r.values.begin(), r.values.end()));
      best = buf;
    }
    std::snprintf(buf, sizeof buf, "%-12s %-10s %14s %14s %12.0f %10lld %5zu/%-2zu\n", r.instance.c_str(),
                  r.method.c_str(), med.c_str(), best.c_str(), median(r.evals), static_cast<long long>(r.wall),
                  r.values.size(), r.runs);
    out << buf;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bilevel optimization toolkit", "bileveler"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--grid", o.grid, "Grid points per axis")->check(CLI::Range(2, 1000000));
    c->add_option("--budget", o.budget, "Grid points, B&B nodes or GA evaluations (env BILEVELER_BUDGET)");
    c->add_option("--out", o.out, "Output format: text or machine");
    c->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    c->add_option("--position", o.position, "optimistic or pessimistic");
  };
  auto ga_opts = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Random seed");
    c->add_option("--population", o.population, "GA population size");
    c->add_option("--generations", o.generations, "GA generations");
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->add_option("--method", o.method, "oracle, kkt-bnb, nested-ga or bobd");
  common(solve);
  ga_opts(solve);
  solve->add_option("file", o.file, "Problem file")->required();

  CLI::App* oracle = app.add_subcommand("oracle", "Grid oracle on a problem file");
  common(oracle);
  oracle->add_option("file", o.file, "Problem file")->required();

  CLI::App* reduce = app.add_subcommand("reduce", "Write the KKT reformulation as an mpec problem file");
  reduce->add_option("--position", o.position, "optimistic or pessimistic");
  reduce->add_option("--lambda-max", o.lambda_max, "Multiplier upper bound")->check(CLI::PositiveNumber);
  reduce->add_option("-o,--output", o.output, "Output path (default stdout)");
  reduce->add_option("file", o.file, "Bilevel problem file")->required();

  CLI::App* classify = app.add_subcommand("classify", "Print the BOBD variable partition");
  classify->add_option("file", o.file, "Single-level problem file")->required();

  CLI::App* bench = app.add_subcommand("bench", "Compare methods on a generated suite");
  bench->add_option("suite", o.suite, "scal or randlin")->required();
  bench->add_option("--sizes", o.sizes, "Comma-separated sizes (scal: n, randlin: fixture seeds)");
  bench->add_option("--seeds", o.seeds, "Seeds per stochastic method")->check(CLI::PositiveNumber);
  bench->add_option("--grid", o.grid, "Oracle grid points per axis")->check(CLI::Range(2, 1000000));
  bench->add_option("--budget", o.budget, "Oracle grid budget / B&B nodes / GA evaluations");
  bench->add_option("--out", o.out, "Output format: text or machine");
  bench->add_option("--population", o.population, "GA population size");
  bench->add_option("--generations", o.generations, "GA generations");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    // Bench defaults to a coarser oracle grid.
    if (!args.empty() && args.front() == "bench") o.grid = 41;
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (o.position != "" && o.position != "optimistic" && o.position != "pessimistic")
      throw UsageError("--position must be optimistic or pessimistic");
    if (*solve) return cmd_solve(o, out, false);
    if (*oracle) return cmd_solve(o, out, true);
    if (*reduce) return cmd_reduce(o, out);
    if (*classify) return cmd_classify(o, out);
    if (*bench) return cmd_bench(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace bileveler
