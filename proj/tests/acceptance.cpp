// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bileveler/bnb.hpp"
#include "bileveler/bobd.hpp"
#include "bileveler/cli.hpp"
#include "bileveler/fixtures.hpp"
#include "bileveler/ga.hpp"
#include "bileveler/lower.hpp"
#include "bileveler/oracle.hpp"
#include "bileveler/problem_io.hpp"
#include "bileveler/reduce.hpp"
#include "bileveler/reference.hpp"
#include "bileveler/simplex.hpp"
#include "lp_oracles.hpp"

using namespace bileveler;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fx(const std::string& name) { return std::string(BILEVELER_FIXTURES_DIR) + "/" + name; }

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& why) {
    if (!ok && pass) detail = why;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string run_cli_capture(const std::vector<std::string>& args, int* code = nullptr) {
  std::ostringstream out, err;
  const int c = run_cli(args, out, err);
  if (code) *code = c;
  return out.str();
}

// Bound on ||grad||_1 over a box: each monomial contributes
// |coeff| * sum_k power_k * prod max|bound|^(power - [k]).
double gradient_bound(const PolyExpression& e, const std::vector<VariableDef>& vars) {
  double L = 0.0;
  for (const Monomial& m : e.terms())
    for (std::size_t k = 0; k < m.factors.size(); ++k) {
      double term = std::abs(m.coeff) * m.factors[k].power;
      for (std::size_t j = 0; j < m.factors.size(); ++j) {
        const VariableDef& v = vars[m.factors[j].var];
        const double r = std::max(std::abs(v.lower), std::abs(v.upper));
        term *= std::pow(r, m.factors[j].power - (j == k ? 1 : 0));
      }
      L += term;
    }
  return L;
}

double l1_coeffs(const PolyExpression& e) {
  double L = 0.0;
  for (const Monomial& m : e.terms()) L += std::abs(m.coeff);
  return L;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto problem = std::get<SingleLevelProblem>(parse_problem_file(fx("bobd-paper-example.json")));
  const std::vector<double> want{5, 2, 0};
  const double h = 10.0 / 100.0;
  const double tol = gradient_bound(problem.objective, problem.variables) * h;

  int code = 0;
  const auto oracle = nlohmann::json::parse(
      run_cli_capture({"oracle", fx("bobd-paper-example"), "--grid", "101", "--out", "machine"}, &code));
  o.require(code == 0, "oracle exit code");
  const double Fo = oracle["F_value"].get<double>();
  o.require(std::abs(Fo + 11.0) <= tol, fmt("oracle F = %.9g", Fo));
  for (std::size_t i = 0; i < 3; ++i) o.require(std::abs(oracle["x"][i].get<double>() - want[i]) <= h, "oracle x*");

  double worst = 0.0;
  for (int seed = 1; seed <= 5; ++seed) {
    const auto r = nlohmann::json::parse(run_cli_capture(
        {"solve", fx("bobd-paper-example"), "--method", "bobd", "--seed", std::to_string(seed), "--out", "machine"},
        &code));
    o.require(code == 0 && r["status"] == "feasible", "bobd seed " + std::to_string(seed) + " not feasible");
    for (const auto& f : r["flags"]) o.require(f != "grid-fallback", "bobd needed the grid fallback");
    worst = std::max(worst, std::abs(r["F_value"].get<double>() + 11.0));
    for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(r["x"][i].get<double>() - want[i]));
  }
  o.require(worst <= 1e-3, fmt("bobd worst deviation %.3g", worst));
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, fmt("runtime %.1f s", secs));
  if (o.pass) o.detail = fmt("oracle F=%.6g, bobd worst deviation %.2g over 5 seeds, %.2f s", Fo, worst, secs);
  return o;
}

struct RandlinRun {
  BilevelProblem problem;
  SolveReport oracle, bnb;
};

std::vector<RandlinRun> randlin_runs;
double randlin_seconds = 0.0;

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  GridSpec g;
  g.points_per_axis = 401;
  g.max_points = 1e11;
  const double h = 10.0 / 400.0;
  double worst = 0.0;
  int matched = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    RandlinRun run{fixtures::randlin(s), {}, {}};
    run.oracle = solve_bilevel_grid(run.problem, g);
    run.bnb = mpec_branch_and_bound(kkt_reduce(run.problem));
    const double tol = l1_coeffs(run.problem.upper_objective) * h;
    const bool ok = run.oracle.status == SolveStatus::Optimal && run.bnb.status == SolveStatus::Optimal &&
                    std::abs(run.oracle.F_value - run.bnb.F_value) <= tol;
    if (ok) ++matched;
    o.require(ok, fmt("seed %g: oracle %.6g vs bnb %.6g", static_cast<double>(s), run.oracle.F_value, run.bnb.F_value));
    worst = std::max(worst, std::abs(run.oracle.F_value - run.bnb.F_value));
    randlin_runs.push_back(std::move(run));
  }
  randlin_seconds = seconds_since(t0);
  o.require(randlin_seconds < 60.0, fmt("runtime %.1f s", randlin_seconds));
  if (o.pass) o.detail = fmt("%g/20 matched, largest gap %.4g, %.1f s", matched, worst, randlin_seconds);
  return o;
}

// Follower LP {min d.y : B_y y >= b - B_x x} at fixed x, for the test-side
// vertex enumeration.
LinearProgramData follower_lp(const LinearBilevelData& d, std::span<const double> x) {
  LinearProgramData lp;
  lp.c = d.d;
  const std::size_t m = d.d.size();
  for (std::size_t i = 0; i < d.b.size(); ++i) {
    LinearRow r;
    r.coeffs = d.B_y[i];
    r.relation = RowRelation::GreaterEqual;
    r.rhs = d.b[i];
    for (std::size_t j = 0; j < x.size(); ++j) r.rhs -= d.B_x[i][j] * x[j];
    lp.rows.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < m; ++j) lp.boxes.push_back({-1e3, 1e3});
  return lp;
}

Outcome criterion3() {
  Outcome o;
  if (randlin_runs.size() != 20) {
    o.require(false, "needs the criterion 2 runs");
    return o;
  }
  std::mt19937_64 rng(303);
  int certified = 0, rejected = 0;
  for (const RandlinRun& run : randlin_runs) {
    const BilevelProblem& p = run.problem;
    const LinearBilevelData d = extract_linear_data(p);
    const std::vector<double>& x = run.oracle.x;
    const bool ok = certifies_lower_optimal(d, x, run.oracle.y);
    o.require(ok, "oracle optimum not certified");
    certified += ok;

    // Suboptimal follower points are random convex combinations of follower
    // vertices. When the follower has a unique response at x*, x is perturbed.
    int found = 0;
    std::vector<double> xp = x;
    for (int attempt = 0; attempt < 2000 && found < 5; ++attempt) {
      if (attempt > 0 && attempt % 50 == 0)
        for (std::size_t i = 0; i < xp.size(); ++i) {
          const VariableDef& v = p.upper_vars[i];
          xp[i] = std::clamp(x[i] + std::normal_distribution<double>(0, 1.0)(rng), v.lower, v.upper);
        }
      const LinearProgramData lp = follower_lp(d, xp);
      const auto verts = testing_support::vertex_list(lp);
      if (verts.empty()) continue;
      const auto phi = testing_support::vertex_enumeration_min(lp);
      std::vector<double> w(verts.size());
      double total = 0.0;
      for (double& wi : w) total += (wi = std::exponential_distribution<double>(1.0)(rng));
      std::vector<double> y(p.n_lower(), 0.0);
      for (std::size_t k = 0; k < verts.size(); ++k)
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += w[k] / total * verts[k][j];
      if (p.lower_violation(xp, y) > 1e-9) continue;
      if (p.lower_objective.evaluate(p.join(xp, y)) - *phi <= 1e-3) continue;
      ++found;
      const bool refuted = !certifies_lower_optimal(d, xp, y);
      o.require(refuted, "suboptimal point certified");
      rejected += refuted;
    }
    o.require(found == 5, fmt("seed %g: only %g suboptimal points found", &run - randlin_runs.data() + 1.0, found));
  }
  if (o.pass) o.detail = fmt("%g/20 optima certified, %g/100 suboptimal points refuted", certified, rejected);
  return o;
}

Outcome criterion4() {
  Outcome o;
  int checked = 0;
  for (const fixtures::CatalogEntry& e : fixtures::catalog()) {
    const auto* b = std::get_if<BilevelProblem>(&e.problem);
    if (!b) continue;
    GridSpec g;
    g.points_per_axis = reference_grid(e.name);
    BilevelProblem p = *b;
    p.position = Position::Optimistic;
    const SolveReport opt = solve_bilevel_grid(p, g);
    p.position = Position::Pessimistic;
    const SolveReport pes = solve_bilevel_grid(p, g);
    o.require(opt.succeeded() && pes.succeeded(), e.name + " did not solve");
    o.require(opt.F_value <= pes.F_value, e.name + fmt(": %.9g > %.9g", opt.F_value, pes.F_value));
    if (e.name == "degenerate-follower")
      o.require(opt.F_value == 0.0 && pes.F_value == 1.0, fmt("degenerate follower %g vs %g", opt.F_value, pes.F_value));
    ++checked;
  }
  if (o.pass) o.detail = fmt("%g bilevel catalog fixtures ordered, degenerate follower 0 vs 1", checked);
  return o;
}

Outcome criterion5() {
  Outcome o;
  std::vector<std::pair<PolyExpression, std::vector<VariableDef>>> exprs;
  auto add_single = [&](const SingleLevelProblem& p) {
    exprs.push_back({p.objective, p.variables});
    for (const Constraint& c : p.constraints) exprs.push_back({c.expr, p.variables});
  };
  auto add_bilevel = [&](const BilevelProblem& p) {
    const std::vector<VariableDef> vars = p.all_vars();
    exprs.push_back({p.upper_objective, vars});
    exprs.push_back({p.lower_objective, vars});
    for (const Constraint& c : p.upper_constraints) exprs.push_back({c.expr, vars});
    for (const Constraint& c : p.lower_constraints) exprs.push_back({c.expr, vars});
  };
  for (const fixtures::CatalogEntry& e : fixtures::catalog())
    std::visit([&](const auto& p) {
      if constexpr (std::is_same_v<std::decay_t<decltype(p)>, SingleLevelProblem>) add_single(p); else add_bilevel(p);
    }, e.problem);
  add_single(fixtures::scal(30, 5));

  std::mt19937_64 rng(505);
  double worst = 0.0;
  for (const auto& [e, vars] : exprs)
    for (int k = 0; k < 100; ++k) {
      std::vector<double> p;
      for (const VariableDef& v : vars) p.push_back(std::uniform_real_distribution<double>(v.lower, v.upper)(rng));
      const std::vector<double> g = e.gradient(p);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double step = 1e-5 * std::max(1.0, std::abs(p[i]));
        std::vector<double> up = p, down = p;
        up[i] += step;
        down[i] -= step;
        const double fd = (e.evaluate(up) - e.evaluate(down)) / (2 * step);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
      }
    }
  o.require(worst < 1e-6, fmt("worst relative error %.3g", worst));
  if (o.pass) o.detail = fmt("%g expressions x 100 points, worst relative error %.2g", static_cast<double>(exprs.size()), worst);
  return o;
}

Outcome criterion6() {
  Outcome o;
  std::mt19937_64 rng(606);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const LinearProgramData lp = testing_support::random_feasible_lp(rng, 5, 5);
    const LpSolution s = simplex_solve(lp);
    o.require(s.status == LpStatus::Optimal, "random LP not solved");
    if (s.status != LpStatus::Optimal) continue;
    // Dual value of the boxed LP built from the reported multipliers.
    double dual = 0.0;
    for (std::size_t i = 0; i < lp.rows.size(); ++i) dual += s.row_duals[i] * lp.rows[i].rhs;
    for (std::size_t j = 0; j < lp.c.size(); ++j) {
      double rc = lp.c[j];
      for (std::size_t i = 0; i < lp.rows.size(); ++i) rc -= s.row_duals[i] * lp.rows[i].coeffs[j];
      dual += rc * (rc >= 0 ? lp.boxes[j].lower : lp.boxes[j].upper);
    }
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
      if (lp.rows[i].relation == RowRelation::LessEqual) o.require(s.row_duals[i] <= 1e-12, "dual sign");
      if (lp.rows[i].relation == RowRelation::GreaterEqual) o.require(s.row_duals[i] >= -1e-12, "dual sign");
    }
    o.require(lp_violation(lp, s.x) <= 1e-9, "primal infeasible");
    worst = std::max(worst, std::abs(s.objective - dual));
  }
  o.require(worst <= 1e-8, fmt("duality gap %.3g", worst));
  double vworst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const LinearProgramData lp = testing_support::random_feasible_lp(rng, 3, 4);
    const LpSolution s = simplex_solve(lp);
    const auto ref = testing_support::vertex_enumeration_min(lp);
    o.require(ref && s.status == LpStatus::Optimal, "3-variable LP not solved");
    if (ref) vworst = std::max(vworst, std::abs(s.objective - *ref) / std::max(1.0, std::abs(*ref)));
  }
  o.require(vworst <= 1e-9, fmt("vertex enumeration mismatch %.3g", vworst));
  if (o.pass) o.detail = fmt("50 LPs, largest duality gap %.2g; 50 three-variable LPs match vertex enumeration", worst);
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::vector<SingleLevelProblem> corpus;
  for (const fixtures::CatalogEntry& e : fixtures::catalog())
    if (const auto* s = std::get_if<SingleLevelProblem>(&e.problem)) corpus.push_back(*s);
  corpus.push_back(fixtures::scal(30, 5));
  std::mt19937_64 rng(707);
  int points = 0;
  for (const SingleLevelProblem& p : corpus) {
    const VariablePartition part = classify_variables(p);
    const BilevelProblem bi = decompose(p, part);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x;
      for (const VariableDef& v : p.variables) x.push_back(std::uniform_real_distribution<double>(v.lower, v.upper)(rng));
      const std::vector<double> z = part.to_decomposed(x);
      const double F = p.objective.evaluate(x);
      o.require(bi.upper_objective.evaluate(z) == F && bi.lower_objective.evaluate(z) == F, "objective changed");
      const std::span<const double> zs(z);
      const std::span<const double> u = zs.first(part.upper.size()), l = zs.subspan(part.upper.size());
      const bool orig_ok = p.max_violation(x) <= 1e-9;
      const bool dec_ok = bi.upper_violation(u, l) <= 1e-9 && bi.lower_violation(u, l) <= 1e-9;
      o.require(orig_ok == dec_ok, "feasibility changed");
      o.require(part.to_original({u.begin(), u.end()}, {l.begin(), l.end()}) == x, "index map does not invert");
      ++points;
    }
  }
  if (o.pass) o.detail = fmt("%g points over %g problems", points, static_cast<double>(corpus.size()));
  return o;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome criterion8() {
  Outcome o;
  const auto t0 = Clock::now();
  GridSpec no_fallback;
  no_fallback.max_points = 0;
  const SingleLevelProblem big = fixtures::scal(30, 5);
  std::vector<double> bobd_best, ga_best, bobd_evals, ga_evals;
  for (std::uint64_t seed = 1; seed <= 11; ++seed) {
    GAConfig ga;
    ga.seed = seed;
    const SolveReport b = bobd_solve(big, ga, no_fallback);
    const SolveReport g = pure_ga_solve(big, ga);
    bobd_best.push_back(b.succeeded() ? b.F_value : std::numeric_limits<double>::infinity());
    ga_best.push_back(g.succeeded() ? g.F_value : std::numeric_limits<double>::infinity());
    bobd_evals.push_back(static_cast<double>(b.upper_evals));
    ga_evals.push_back(static_cast<double>(g.upper_evals));
  }
  const double mb = median(bobd_best), mg = median(ga_best);
  o.require(mb <= mg, fmt("median bobd %.6g > pure ga %.6g", mb, mg));
  o.require(*std::max_element(bobd_evals.begin(), bobd_evals.end()) <= *std::max_element(ga_evals.begin(), ga_evals.end()),
            "bobd used more upper evaluations");

  const SingleLevelProblem small = fixtures::scal(4, fixtures::scal_default_k(4));
  GridSpec grid;
  grid.points_per_axis = 41;
  const SolveReport ref = solve_single_grid(small, grid);
  const double tol = gradient_bound(small.objective, small.variables) * 10.0 / 40.0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 11; ++seed) {
    GAConfig ga;
    ga.seed = seed;
    const SolveReport b = bobd_solve(small, ga, no_fallback);
    o.require(b.succeeded(), "n=4 bobd infeasible");
    worst = std::max(worst, std::abs(b.F_value - ref.F_value));
  }
  o.require(worst <= tol, fmt("n=4 gap %.4g > %.4g", worst, tol));
  const double secs = seconds_since(t0);
  o.require(secs < 300.0, fmt("runtime %.1f s", secs));
  if (o.pass)
    o.detail = fmt("median bobd %.6g vs pure ga %.6g; ", mb, mg) +
               fmt("n=4 worst gap %.3g to oracle %.6g, %.1f s", worst, ref.F_value, secs);
  return o;
}

Outcome criterion9() {
  Outcome o;
  const fixtures::Samples train{{1, 1}, {2, 2}}, valid{{3, 2.7}};
  const auto problem = std::get<BilevelProblem>(parse_problem_file(fx("ridge-nas-demo.json")));
  // Validation optimum w = sum t s / sum t^2 over the validation data, then
  // invert w*(a) = sum t s / (sum t^2 + a) over the training data.
  const double a_star = 5.0 / (2.7 / 3.0) - 5.0;

  GAConfig ga;
  ga.seed = 1;
  const SolveReport r = nested_ga_solve(problem, ga);
  o.require(r.succeeded(), "ridge solve failed");
  const double a = r.x.empty() ? -1 : r.x[0];
  o.require(std::abs(a - a_star) <= 1e-2, fmt("a = %.6g vs %.6g", a, a_star));

  double best_a = 0.0, best_F = std::numeric_limits<double>::infinity();
  const int steps = 100;
  const double step = 10.0 / steps;
  for (int i = 0; i <= steps; ++i) {
    const double ai = i * step;
    const double w = fixtures::ridge_weight(train, ai);
    const double F = (w * valid[0].first - valid[0].second) * (w * valid[0].first - valid[0].second);
    if (F < best_F) {
      best_F = F;
      best_a = ai;
    }
  }
  o.require(std::abs(a - best_a) <= step, fmt("a = %.6g vs grid %.6g", a, best_a));

  double worst = 0.0;
  for (double ai : {0.0, 0.3, 5.0 / 9.0, 1.0, 2.5, 7.0, 10.0}) {
    const std::vector<double> x{ai};
    const LowerSolution s = solve_lower(problem, x, LowerMode::ConvexQuadratic);
    worst = std::max(worst, std::abs(s.y[0] - fixtures::ridge_weight(train, ai)));
  }
  o.require(worst <= 1e-8, fmt("projected gradient error %.3g", worst));
  if (o.pass) o.detail = fmt("a* = %.6g (closed form %.6g), projected gradient error %.2g", a, a_star, worst);
  return o;
}

Outcome criterion10() {
  Outcome o;
  const std::regex wall("\"wall_ms\":[0-9]+");
  const std::vector<std::vector<std::string>> runs = {
      {"oracle", fx("randlin-1"), "--grid", "41"},
      {"oracle", fx("degenerate-follower"), "--position", "pessimistic"},
      {"solve", fx("lb1"), "--method", "kkt-bnb"},
      {"solve", fx("randlin-1"), "--method", "nested-ga", "--seed", "9"},
      {"solve", fx("ridge-nas-demo"), "--seed", "4", "--generations", "40"},
      {"solve", fx("bobd-paper-example"), "--method", "bobd", "--seed", "3"},
      {"solve", fx("scal-4"), "--method", "nested-ga", "--seed", "5", "--workers", "3"},
      {"bench", "scal", "--sizes", "4", "--seeds", "2", "--generations", "30"},
  };
  for (std::vector<std::string> args : runs) {
    args.push_back("--out");
    args.push_back("machine");
    const std::string a = std::regex_replace(run_cli_capture(args), wall, "");
    const std::string b = std::regex_replace(run_cli_capture(args), wall, "");
    o.require(!a.empty() && a == b, "differs: " + args[0] + " " + args[1]);
  }
  if (o.pass) o.detail = fmt("%g command lines reproduced byte for byte", static_cast<double>(runs.size()));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"worked example exactness", criterion1},
      {"kkt branch and bound vs oracle", criterion2},
      {"duality certificate soundness", criterion3},
      {"optimistic/pessimistic ordering", criterion4},
      {"gradient fidelity", criterion5},
      {"simplex strong duality", criterion6},
      {"bobd decomposition identities", criterion7},
      {"bobd vs pure ga", criterion8},
      {"nas demo", criterion9},
      {"determinism", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    failed += !r.pass;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, r.pass ? "PASS" : "FAIL", criteria[i].first, r.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
