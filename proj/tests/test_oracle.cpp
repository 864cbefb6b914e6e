#include <doctest.h>

#include <algorithm>

#include "bileveler/error.hpp"
#include "bileveler/fixtures.hpp"
#include "bileveler/oracle.hpp"

using namespace bileveler;

namespace {

GridSpec grid_with(std::size_t points) {
  GridSpec g;
  g.points_per_axis = points;
  return g;
}

// Decomposed worked example: u1 upper, (l1, l2) lower.
BilevelProblem decomposed_worked_example() {
  BilevelProblem p;
  p.upper_vars = {{"u1", 0, 10}};
  p.lower_vars = {{"l1", 0, 10}, {"l2", 0, 10}};
  const PolyExpression obj(0.0, {{1.0, {{1, 1}}}, {-2.0, {{0, 3}}}, {4.0, {{2, 1}}}});
  p.upper_objective = obj;
  p.lower_objective = obj;
  p.lower_constraints = {{PolyExpression(5.0, {{-1.0, {{1, 1}}}, {-1.0, {{2, 1}}}}), Relation::LessEqual, ""},
                         {PolyExpression(-4.0, {{1.0, {{0, 2}}}, {1.0, {{2, 1}}}}), Relation::LessEqual, ""}};
  return p;
}

bool contains(const std::vector<std::vector<double>>& set, const std::vector<double>& y) {
  return std::find(set.begin(), set.end(), y) != set.end();
}

}  // namespace

TEST_CASE("grid axes include both endpoints") {
  const auto axis = grid_axis({"v", -1.0, 1.0}, 5);
  CHECK(axis == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(grid_axis({"v", 2.0, 2.0}, 5) == std::vector<double>{2.0});
}

TEST_CASE("lower_feasible_set") {
  const BilevelProblem p = decomposed_worked_example();
  CHECK(lower_feasible_set(p, std::vector<double>{3.0}, grid_with(11)).empty());
  const auto at2 = lower_feasible_set(p, std::vector<double>{2.0}, grid_with(11));
  CHECK(contains(at2, {5.0, 0.0}));
  CHECK(at2.size() == 6);  // l2 = 0 forced, l1 in {5..10}

  BilevelProblem free = fixtures::degenerate_follower();
  CHECK(lower_feasible_set(free, std::vector<double>{0.5}, grid_with(11)).size() == 11);
}

TEST_CASE("reaction_set") {
  const BilevelProblem lb1 = fixtures::lb1();
  const ReactionSet rs = reaction_set(lb1, std::vector<double>{2.0}, grid_with(21));
  CHECK(rs.phi == -2.0);
  CHECK(rs.members == std::vector<std::vector<double>>{{2.0}});

  const ReactionSet all = reaction_set(fixtures::degenerate_follower(), std::vector<double>{0.0}, grid_with(11));
  CHECK(all.members.size() == 11);

  const ReactionSet worked = reaction_set(decomposed_worked_example(), std::vector<double>{2.0}, grid_with(11));
  CHECK(worked.phi == doctest::Approx(5.0 - 16.0));
  CHECK(worked.members == std::vector<std::vector<double>>{{5.0, 0.0}});

  try {
    reaction_set(decomposed_worked_example(), std::vector<double>{3.0}, grid_with(11));
    FAIL("expected EmptyLowerFeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyLowerFeasible);
  }
}

TEST_CASE("reaction members are feasible and within eps_f of phi") {
  const BilevelProblem p = fixtures::randlin(3);
  const GridSpec g = grid_with(21);
  for (double x1 : {0.0, 2.5, 7.0})
    for (double x2 : {1.0, 5.5}) {
      const std::vector<double> x{x1, x2};
      const auto feasible = lower_feasible_set(p, x, g);
      if (feasible.empty()) continue;
      const ReactionSet rs = reaction_set(p, x, g);
      double min_f = 1e300;
      for (const auto& y : rs.members) {
        CHECK(contains(feasible, y));
        min_f = std::min(min_f, p.lower_objective.evaluate(p.join(x, y)));
      }
      CHECK(std::abs(min_f - rs.phi) <= g.eps_f * (1 + std::abs(rs.phi)));
    }
}

TEST_CASE("choose applies position and lexicographic ties") {
  const BilevelProblem p = fixtures::degenerate_follower();
  const ReactionSet rs = reaction_set(p, std::vector<double>{0.3}, grid_with(11));
  CHECK(choose(rs, p.upper_objective, Position::Optimistic) == std::vector<double>{0.0});
  CHECK(choose(rs, p.upper_objective, Position::Pessimistic) == std::vector<double>{1.0});

  ReactionSet single{{0.0}, {{0.4}}, 0.0};
  CHECK(choose(single, p.upper_objective, Position::Optimistic) == std::vector<double>{0.4});
  CHECK(choose(single, p.upper_objective, Position::Pessimistic) == std::vector<double>{0.4});

  // F = y1 + y2: (0, 1) and (1, 0) tie, the smaller one lexicographically wins.
  ReactionSet tie{{0.0}, {{1.0, 0.0}, {0.0, 1.0}}, 0.0};
  const PolyExpression F(0.0, {{1.0, {{1, 1}}}, {1.0, {{2, 1}}}});
  CHECK(choose(tie, F, Position::Optimistic) == std::vector<double>{0.0, 1.0});
  CHECK(choose(tie, F, Position::Pessimistic) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("solve_bilevel_grid on LB1 and the degenerate follower") {
  const SolveReport r = solve_bilevel_grid(fixtures::lb1(), grid_with(201));
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.F_value == -6.0);
  CHECK(r.x == std::vector<double>{2.0});
  CHECK(r.y == std::vector<double>{2.0});

  CHECK(solve_bilevel_grid(fixtures::degenerate_follower(Position::Optimistic), grid_with(11)).F_value == 0.0);
  CHECK(solve_bilevel_grid(fixtures::degenerate_follower(Position::Pessimistic), grid_with(11)).F_value == 1.0);
}

TEST_CASE("solve_bilevel_grid reports infeasible when G excludes every point") {
  BilevelProblem p = fixtures::lb1();
  p.upper_constraints = {{PolyExpression(5.0, {{1.0, {{0, 1}}}}), Relation::LessEqual, "impossible"}};  // x + 5 <= 0
  CHECK(solve_bilevel_grid(p, grid_with(21)).status == SolveStatus::Infeasible);
}

TEST_CASE("grid budget guard") {
  GridSpec g = grid_with(101);
  g.max_points = 1e3;
  const SolveReport r = solve_bilevel_grid(fixtures::lb1(), g);
  CHECK(r.status == SolveStatus::BudgetExceeded);
}

TEST_CASE("solve_single_grid") {
  const SolveReport r = solve_single_grid(fixtures::bobd_paper_example(), grid_with(101));
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.F_value == -11.0);
  CHECK(r.x == std::vector<double>{5.0, 2.0, 0.0});

  SingleLevelProblem sq;
  sq.variables = {{"x", -1.0, 1.0}};
  sq.objective = PolyExpression::power(0, 2);
  const SolveReport q = solve_single_grid(sq, grid_with(21));
  CHECK(q.F_value == 0.0);
  CHECK(q.x == std::vector<double>{0.0});

  sq.constraints = {{PolyExpression(2.0, {{1.0, {{0, 1}}}}), Relation::LessEqual, ""}};  // x + 2 <= 0
  CHECK(solve_single_grid(sq, grid_with(21)).status == SolveStatus::Infeasible);
}

TEST_CASE("pruned search matches exhaustive enumeration") {
  std::vector<BilevelProblem> problems = {fixtures::lb1(), fixtures::degenerate_follower(Position::Pessimistic),
                                          decomposed_worked_example(), fixtures::ridge_nas_demo()};
  for (std::uint64_t s = 1; s <= 4; ++s) problems.push_back(fixtures::randlin(s));
  for (const BilevelProblem& p : problems)
    for (Position pos : {Position::Optimistic, Position::Pessimistic}) {
      BilevelProblem q = p;
      q.position = pos;
      GridSpec pruned = grid_with(17);
      GridSpec full = pruned;
      full.exhaustive = true;
      const SolveReport a = solve_bilevel_grid(q, pruned), b = solve_bilevel_grid(q, full);
      CHECK(a.status == b.status);
      CHECK(a.F_value == b.F_value);
      CHECK(a.x == b.x);
      CHECK(a.y == b.y);
    }
}

TEST_CASE("oracle result is independent of worker count") {
  const BilevelProblem p = fixtures::randlin(2);
  GridSpec one = grid_with(41);
  GridSpec three = one;
  three.workers = 3;
  const SolveReport a = solve_bilevel_grid(p, one), b = solve_bilevel_grid(p, three);
  CHECK(a.F_value == b.F_value);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}

TEST_CASE("optimistic optimum never exceeds pessimistic") {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    BilevelProblem p = fixtures::randlin(s);
    const SolveReport o = solve_bilevel_grid(p, grid_with(21));
    p.position = Position::Pessimistic;
    const SolveReport q = solve_bilevel_grid(p, grid_with(21));
    if (q.status == SolveStatus::Optimal) CHECK(o.F_value <= q.F_value);
  }
}

TEST_CASE("oracle is invariant under constraint permutation") {
  BilevelProblem p = fixtures::randlin(4);
  const SolveReport a = solve_bilevel_grid(p, grid_with(21));
  std::reverse(p.lower_constraints.begin(), p.lower_constraints.end());
  const SolveReport b = solve_bilevel_grid(p, grid_with(21));
  CHECK(a.F_value == b.F_value);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}

TEST_CASE("grid refinement improves within the mesh bound") {
  // LB1: F = x - 4y has |dF| <= 5 summed over coordinates.
  const BilevelProblem p = fixtures::lb1();
  for (std::size_t n : {5u, 11u, 21u}) {
    const SolveReport coarse = solve_bilevel_grid(p, grid_with(n));
    const SolveReport fine = solve_bilevel_grid(p, grid_with(2 * n - 1));
    const double h = 2.0 / static_cast<double>(n - 1);
    CHECK(fine.F_value <= coarse.F_value + 5.0 * h);
  }
}
