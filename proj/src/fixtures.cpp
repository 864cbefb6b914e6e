#include "bileveler/fixtures.hpp"

#include <random>

#include "bileveler/error.hpp"
#include "bileveler/oracle.hpp"

namespace bileveler::fixtures {
namespace {

Monomial lin(double c, std::size_t v) { return Monomial{c, {{v, 1}}, Modifier::None}; }
Monomial pw(double c, std::size_t v, int p) { return Monomial{c, {{v, p}}, Modifier::None}; }

Constraint leq(PolyExpression e, std::string name = {}) { return Constraint{std::move(e), Relation::LessEqual, std::move(name)}; }

// Integer in [lo, hi] drawn straight from the engine so the stream is
// identical across standard library implementations.
int draw(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

BilevelProblem randlin_candidate(std::mt19937_64& rng) {
  BilevelProblem p;
  p.upper_vars = {{"x1", 0, 10}, {"x2", 0, 10}};
  p.lower_vars = {{"y1", 0, 10}, {"y2", 0, 10}};
  auto coeff = [&] { return static_cast<double>(draw(rng, -5, 5)); };

  // Draws are sequenced explicitly; argument evaluation order is unspecified.
  auto row = [&](std::size_t vars) {
    std::vector<Monomial> terms;
    for (std::size_t v = 0; v < vars; ++v) terms.push_back(lin(coeff(), v));
    return terms;
  };
  p.upper_objective = PolyExpression(0.0, row(4));
  {
    std::vector<Monomial> terms = row(4);
    const double rhs = draw(rng, 0, 30);
    p.upper_constraints = {leq(PolyExpression(-rhs, std::move(terms)), "G1")};
  }

  double d1 = 0.0, d2 = 0.0;
  while (d1 == 0.0 && d2 == 0.0) {
    d1 = coeff();
    d2 = coeff();
  }
  p.lower_objective = PolyExpression(0.0, {lin(d1, 2), lin(d2, 3)});

  // Follower rows come from {±e1, ±e2, ±(1, s)} for one diagonal sign s.
  const double s = draw(rng, 0, 1) == 0 ? 1.0 : -1.0;
  for (int q = 0; q < 3; ++q) {
    double b1 = 0.0, b2 = 0.0;
    switch (draw(rng, 0, 2)) {
      case 0: b1 = 1.0; break;
      case 1: b2 = 1.0; break;
      default: b1 = 1.0; b2 = s; break;
    }
    const double sign = draw(rng, 0, 1) == 0 ? 1.0 : -1.0;
    std::vector<Monomial> terms = row(2);
    terms.push_back(lin(sign * b1, 2));
    terms.push_back(lin(sign * b2, 3));
    const double rhs = draw(rng, 0, 30);
    p.lower_constraints.push_back(leq(PolyExpression(-rhs, std::move(terms)), "g" + std::to_string(q + 1)));
  }
  return p;
}

}  // namespace

SingleLevelProblem bobd_paper_example() {
  SingleLevelProblem p;
  p.variables = {{"x1", 0, 10}, {"x2", 0, 10}, {"x3", 0, 10}};
  p.objective = PolyExpression(0.0, {lin(1, 0), pw(-2, 1, 3), lin(4, 2)});
  p.constraints = {leq(PolyExpression(5.0, {lin(-1, 0), lin(-1, 2)}), "cover"),
                   leq(PolyExpression(-4.0, {pw(1, 1, 2), lin(1, 2)}), "cap")};
  p.validate();
  return p;
}

BilevelProblem lb1() {
  BilevelProblem p;
  p.upper_vars = {{"x", 0, 2}};
  p.lower_vars = {{"y", 0, 2}};
  p.upper_objective = PolyExpression(0.0, {lin(1, 0), lin(-4, 1)});
  p.lower_objective = PolyExpression(0.0, {lin(-1, 1)});
  p.lower_constraints = {leq(PolyExpression(0.0, {lin(1, 1), lin(-1, 0)}), "follow")};
  p.validate();
  return p;
}

BilevelProblem degenerate_follower(Position position) {
  BilevelProblem p;
  p.upper_vars = {{"x", 0, 1}};
  p.lower_vars = {{"y", 0, 1}};
  p.upper_objective = PolyExpression(0.0, {lin(1, 1)});
  p.position = position;
  p.validate();
  return p;
}

double ridge_weight(const Samples& train, double a) {
  double ts = 0.0, tt = 0.0;
  for (const auto& [t, s] : train) {
    ts += t * s;
    tt += t * t;
  }
  return ts / (tt + a);
}

BilevelProblem ridge_nas_demo(const Samples& train, const Samples& valid, std::pair<double, double> a_bounds) {
  if (train.empty() || valid.empty()) throw Error(ErrorCode::EmptyData, "ridge demo needs training and validation data");
  double ts = 0.0, tt = 0.0, ss = 0.0;
  for (const auto& [t, s] : train) {
    ts += t * s;
    tt += t * t;
    ss += s * s;
  }
  if (!(tt > 0.0)) throw Error(ErrorCode::EmptyData, "training inputs are all zero");
  double vts = 0.0, vtt = 0.0, vss = 0.0;
  for (const auto& [t, s] : valid) {
    vts += t * s;
    vtt += t * t;
    vss += s * s;
  }
  // Weight box generously covers w*(a) for every a >= 0.
  const double w_bound = 1.0 + 2.0 * std::abs(ts) / tt;

  BilevelProblem p;
  p.upper_vars = {{"a", a_bounds.first, a_bounds.second}};
  p.lower_vars = {{"w", -w_bound, w_bound}};
  // sum (w t - s)^2 = w^2 sum t^2 - 2 w sum t s + sum s^2
  p.upper_objective = PolyExpression(vss, {pw(vtt, 1, 2), lin(-2.0 * vts, 1)});
  p.lower_objective = PolyExpression(ss, {pw(tt, 1, 2), lin(-2.0 * ts, 1), Monomial{1.0, {{0, 1}, {1, 2}}, Modifier::None}});
  p.validate();
  return p;
}

BilevelProblem ridge_nas_demo() { return ridge_nas_demo({{1.0, 1.0}, {2.0, 2.0}}, {{3.0, 2.7}}, {0.0, 10.0}); }

BilevelProblem randlin(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GridSpec grid;
  grid.points_per_axis = 41;
  for (;;) {
    BilevelProblem p = randlin_candidate(rng);
    if (solve_bilevel_grid(p, grid).status == SolveStatus::Optimal) return p;
  }
}

std::size_t scal_default_k(std::size_t n) { return std::max<std::size_t>(1, n / 6); }

SingleLevelProblem scal(std::size_t n, std::size_t k) {
  if (k == 0 || k >= n) throw Error(ErrorCode::Structural, "scal needs 1 <= k < n");
  const std::size_t L = n - k;
  // Complexity variables sit at evenly spaced positions among v1..vn.
  std::vector<bool> is_complex(n, false);
  for (std::size_t i = 0; i < k; ++i) is_complex[i * n / k] = true;
  std::vector<std::size_t> cubic, linear;
  for (std::size_t v = 0; v < n; ++v) (is_complex[v] ? cubic : linear).push_back(v);

  SingleLevelProblem p;
  for (std::size_t v = 0; v < n; ++v) p.variables.push_back({"v" + std::to_string(v + 1), 0, 10});
  std::vector<Monomial> obj;
  for (std::size_t u : cubic) obj.push_back(pw(-2.0, u, 3));
  for (std::size_t j = 0; j < L; ++j) obj.push_back(lin(static_cast<double>(1 + j % 4), linear[j]));
  p.objective = PolyExpression(0.0, std::move(obj));
  for (std::size_t i = 0; i < k; ++i)
    p.constraints.push_back(leq(PolyExpression(-4.0, {pw(1.0, cubic[i], 2), lin(1.0, linear[i * L / k])}),
                                "cap" + std::to_string(i + 1)));
  for (std::size_t j = 0; j + 1 < L; ++j)
    p.constraints.push_back(leq(PolyExpression(5.0, {lin(-1.0, linear[j]), lin(-1.0, linear[j + 1])}),
                                "cover" + std::to_string(j + 1)));
  p.validate();
  return p;
}

std::vector<CatalogEntry> catalog() {
  return {
      {"bobd-paper-example", bobd_paper_example()},
      {"lb1", lb1()},
      {"degenerate-follower", degenerate_follower()},
      {"ridge-nas-demo", ridge_nas_demo()},
      {"randlin-1", randlin(1)},
      {"scal-4", scal(4, scal_default_k(4))},
  };
}

}  // namespace bileveler::fixtures
