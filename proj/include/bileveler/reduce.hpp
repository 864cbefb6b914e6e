#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "bileveler/linalg.hpp"
#include "bileveler/oracle.hpp"
#include "bileveler/problem.hpp"
#include "bileveler/report.hpp"
#include "bileveler/simplex.hpp"
#include "bileveler/surrogate.hpp"

namespace bileveler {

struct ComplementarityPair {
  std::size_t multiplier = 0;  // variable index in base
  std::size_t constraint = 0;  // constraint index in base

  friend bool operator==(const ComplementarityPair&, const ComplementarityPair&) = default;
};

// Single-level program over (x, y, lambda) plus complementarity pairs
// lambda_q * g_q = 0.
struct MpecProblem {
  SingleLevelProblem base;
  std::vector<ComplementarityPair> complementarity_pairs;
  std::size_t n_upper = 0;
  std::size_t n_lower = 0;
  PolyExpression lower_objective;  // indexed over base variables

  std::size_t n_multipliers() const { return base.dimension() - n_upper - n_lower; }
  // Largest |lambda_q * g_q| at point.
  double complementarity_residual(std::span<const double> point) const;
  void validate() const;

  friend bool operator==(const MpecProblem&, const MpecProblem&) = default;
};

struct KktOptions {
  double lambda_max = 1e6;
};

MpecProblem kkt_reduce(const BilevelProblem& problem, const KktOptions& options = {});

// Upper: A_x x + A_y y >= a. Lower: min d.y s.t. B_x x + B_y y >= b, lower
// boxes included as rows. Equalities appear as two opposite rows.
struct LinearBilevelData {
  std::vector<double> c_x, c_y;
  DenseMatrix A_x, A_y;
  std::vector<double> a;
  DenseMatrix B_x, B_y;
  std::vector<double> b;
  std::vector<double> d;
};

// Throws Structural unless F, f, G and g are all affine.
LinearBilevelData extract_linear_data(const BilevelProblem& problem);

// Feasibility LP {B_y^T l = d, l >= 0, (b - B_x x)^T l >= d.y}.
LinearProgramData dual_certificate_lp(const LinearBilevelData& data, std::span<const double> x,
                                      std::span<const double> y);

// Runs the certificate LP through the simplex.
bool certifies_lower_optimal(const LinearBilevelData& data, std::span<const double> x, std::span<const double> y);

using PhiFunction = std::function<double(std::span<const double>)>;

// min F s.t. G, g, and f(x,y) <= phi(x) + delta_rel * (1 + |phi(x)|).
struct ValueFunctionProgram {
  SingleLevelProblem base;  // variables (x, y), objective F, constraints G and g
  std::size_t n_upper = 0;
  PolyExpression lower_objective;
  PhiFunction phi;
  double delta_rel = 1e-6;

  // f(x,y) - phi(x) - delta; feasible when <= 0.
  double value_gap(std::span<const double> point) const;
  bool feasible(std::span<const double> point, double eps_g) const;
};

ValueFunctionProgram value_function_reduce(const BilevelProblem& problem, const SurrogateModel& phi_hat,
                                           double delta_rel = 1e-6);
ValueFunctionProgram value_function_reduce(const BilevelProblem& problem, PhiFunction phi, double delta_rel);

// Best grid point of the reduced program by F, ties to lexicographically
// smallest point.
SolveReport solve_value_function_grid(const ValueFunctionProgram& program, const GridSpec& grid);

// phi(x) from the grid oracle; +inf where the follower grid is empty.
PhiFunction oracle_phi(const BilevelProblem& problem, const GridSpec& grid);

}  // namespace bileveler
