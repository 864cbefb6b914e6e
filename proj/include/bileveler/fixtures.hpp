#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bileveler/problem.hpp"

namespace bileveler::fixtures {

// min x1 - 2 x2^3 + 4 x3  s.t.  -x1 - x3 <= -5,  x2^2 + x3 <= 4,  0 <= x <= 10.
SingleLevelProblem bobd_paper_example();

// Upper: min x - 4y, x in [0, 2]. Lower: min -y s.t. y <= x, y in [0, 2].
BilevelProblem lb1();

// Lower objective identically zero, F = y: every y in [0, 1] is a follower
// optimum, so the position alone decides the leader's value.
BilevelProblem degenerate_follower(Position position = Position::Optimistic);

using Samples = std::vector<std::pair<double, double>>;  // (t, s)

// One-weight ridge model: upper F = sum_valid (w t - s)^2 over the
// regularization weight a; lower f = sum_train (w t - s)^2 + a w^2.
BilevelProblem ridge_nas_demo(const Samples& train, const Samples& valid, std::pair<double, double> a_bounds);
BilevelProblem ridge_nas_demo();  // train {(1,1),(2,2)}, valid {(3,2.7)}, a in [0,10]

// Closed-form follower response w*(a) = sum t s / (sum t^2 + a).
double ridge_weight(const Samples& train, double a);

// Random linear bilevel instance: 2 upper + 2 lower variables on [0,10],
// 1 upper + 3 lower constraints, integer coefficients in [-5,5]. Lower-level
// coefficient rows are drawn from a totally unimodular family so follower
// vertices land on the grid whenever x does. Resampled until the grid oracle
// finds a feasible optimistic optimum.
BilevelProblem randlin(std::uint64_t seed);

// Separable nonconvex family: k cubic "complexity" variables, each coupled to
// one of n-k linear variables by u^2 + l <= 4, and a covering chain
// l_j + l_{j+1} >= 5 over the linear block.
SingleLevelProblem scal(std::size_t n, std::size_t k);
std::size_t scal_default_k(std::size_t n);

struct CatalogEntry {
  std::string name;
  std::variant<SingleLevelProblem, BilevelProblem> problem;
};

// Named instances shipped under fixtures/.
std::vector<CatalogEntry> catalog();

}  // namespace bileveler::fixtures
