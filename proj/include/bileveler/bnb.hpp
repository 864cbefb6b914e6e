#pragma once

#include <cstdint>
#include <functional>

#include "bileveler/reduce.hpp"
#include "bileveler/report.hpp"

namespace bileveler {

struct BnbOptions {
  std::uint64_t node_limit = 100000;
  double complementarity_tol = 1e-9;
  // Called with each new incumbent objective, in order.
  std::function<void(double)> on_incumbent;
};

// Depth-first complementarity branching on a linear MPEC. Node relaxations
// drop the complementarity pairs; the most violated |lambda_q g_q| is split
// into lambda_q = 0 (explored first) and g_q = 0. Throws NonlinearBase when
// the base program is not linear.
SolveReport mpec_branch_and_bound(const MpecProblem& mpec, const BnbOptions& options = {});

}  // namespace bileveler
