#include "bileveler/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bileveler/error.hpp"

namespace bileveler {
namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;
constexpr std::size_t kMaxPivots = 200000;

enum class ColKind { Structural, Slack, Artificial };

// Dense tableau over x' = x - lower >= 0. The last column holds the rhs and
// the last row holds reduced costs (rhs entry = -objective).
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double& cost(std::size_t j) { return at(rows_, j); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t r, std::size_t c) {
    const std::size_t w = cols_ + 1;
    double* prow = &a_[r * w];
    const double inv = 1.0 / prow[c];
    for (std::size_t j = 0; j < w; ++j) prow[j] *= inv;
    prow[c] = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      double* row = &a_[i * w];
      const double factor = row[c];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < w; ++j) row[j] -= factor * prow[j];
      row[c] = 0.0;
    }
  }

  void erase_row(std::size_t r) {
    const std::size_t w = cols_ + 1;
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r * w),
             a_.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
    --rows_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> a_;
};

struct StdRow {
  std::vector<double> coeffs;
  RowRelation relation;
  double rhs;
  bool flipped = false;
  std::size_t origin;  // index into lp.rows, or npos for box rows
};

constexpr std::size_t npos = static_cast<std::size_t>(-1);

// Runs Bland-rule simplex on the current cost row. Returns false if unbounded.
bool run_simplex(Tableau& t, std::vector<std::size_t>& basis, const std::vector<bool>& may_enter,
                 std::size_t& pivots) {
  for (;;) {
    std::size_t enter = npos;
    for (std::size_t j = 0; j < t.cols(); ++j)
      if (may_enter[j] && t.cost(j) < -kCostTol) {
        enter = j;
        break;
      }
    if (enter == npos) return true;
    std::size_t leave = npos;
    double best = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = t.rhs(i) / a;
      if (leave == npos || ratio < best - 1e-12 ||
          (std::abs(ratio - best) <= 1e-12 && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave == npos) return false;
    t.pivot(leave, enter);
    basis[leave] = enter;
    if (++pivots > kMaxPivots) throw Error(ErrorCode::Structural, "simplex pivot limit exceeded");
  }
}

}  // namespace

void LinearProgramData::validate() const {
  const std::size_t n = c.size();
  if (boxes.size() != n) throw Error(ErrorCode::DimensionMismatch, "LP boxes do not match cost vector");
  for (const LinearRow& r : rows)
    if (r.coeffs.size() != n) throw Error(ErrorCode::DimensionMismatch, "LP row width does not match cost vector");
  for (const VarBounds& b : boxes) {
    if (!std::isfinite(b.lower)) throw Error(ErrorCode::UnboundedVariable, "LP variable lower bound must be finite");
    if (std::isnan(b.upper) || b.upper < b.lower) throw Error(ErrorCode::Structural, "LP variable has upper < lower");
  }
}

LpSolution simplex_solve(const LinearProgramData& lp) {
  lp.validate();
  const std::size_t n = lp.dimension();

  std::vector<StdRow> std_rows;
  std_rows.reserve(lp.rows.size() + n);
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const LinearRow& r = lp.rows[i];
    double b = r.rhs;
    for (std::size_t j = 0; j < n; ++j) b -= r.coeffs[j] * lp.boxes[j].lower;
    std_rows.push_back(StdRow{r.coeffs, r.relation, b, false, i});
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lp.boxes[j].upper)) continue;
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    std_rows.push_back(StdRow{std::move(e), RowRelation::LessEqual, lp.boxes[j].upper - lp.boxes[j].lower, false, npos});
  }
  for (StdRow& r : std_rows) {
    if (r.rhs < 0.0) {
      r.flipped = true;
      r.rhs = -r.rhs;
      for (double& v : r.coeffs) v = -v;
      if (r.relation == RowRelation::LessEqual)
        r.relation = RowRelation::GreaterEqual;
      else if (r.relation == RowRelation::GreaterEqual)
        r.relation = RowRelation::LessEqual;
    }
  }

  // Column layout: structural | slack/surplus per inequality | artificial per >= or = row.
  const std::size_t m = std_rows.size();
  std::vector<ColKind> kind(n, ColKind::Structural);
  std::vector<std::size_t> slack_col(m, npos), art_col(m, npos);
  for (std::size_t i = 0; i < m; ++i)
    if (std_rows[i].relation != RowRelation::Equal) {
      slack_col[i] = kind.size();
      kind.push_back(ColKind::Slack);
    }
  for (std::size_t i = 0; i < m; ++i)
    if (std_rows[i].relation != RowRelation::LessEqual) {
      art_col[i] = kind.size();
      kind.push_back(ColKind::Artificial);
    }
  const std::size_t ncols = kind.size();

  Tableau t(m, ncols);
  std::vector<std::size_t> basis(m);
  std::vector<std::size_t> unit_col(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) = std_rows[i].coeffs[j];
    t.rhs(i) = std_rows[i].rhs;
    if (slack_col[i] != npos) t.at(i, slack_col[i]) = std_rows[i].relation == RowRelation::LessEqual ? 1.0 : -1.0;
    if (art_col[i] != npos) t.at(i, art_col[i]) = 1.0;
    basis[i] = std_rows[i].relation == RowRelation::LessEqual ? slack_col[i] : art_col[i];
    unit_col[i] = basis[i];
  }

  LpSolution sol;
  std::vector<bool> may_enter(ncols, true);

  // Phase 1: minimize the sum of artificials.
  bool any_artificial = false;
  for (std::size_t j = 0; j < ncols; ++j) t.cost(j) = kind[j] == ColKind::Artificial ? 1.0 : 0.0;
  t.rhs(m) = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (kind[basis[i]] == ColKind::Artificial) {
      any_artificial = true;
      for (std::size_t j = 0; j <= ncols; ++j) t.at(m, j) -= t.at(i, j);
    }
  if (any_artificial) {
    run_simplex(t, basis, may_enter, sol.pivots);
    double scale = 1.0;
    for (const StdRow& r : std_rows) scale = std::max(scale, std::abs(r.rhs));
    if (-t.rhs(m) > 1e-9 * scale) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    // Drive zero-level artificials out of the basis; drop redundant rows.
    std::vector<std::size_t> origin(m);
    for (std::size_t i = 0; i < m; ++i) origin[i] = i;
    for (std::size_t i = 0; i < t.rows();) {
      if (kind[basis[i]] != ColKind::Artificial) {
        ++i;
        continue;
      }
      std::size_t col = npos;
      for (std::size_t j = 0; j < ncols; ++j)
        if (kind[j] != ColKind::Artificial && std::abs(t.at(i, j)) > 1e-9) {
          col = j;
          break;
        }
      if (col != npos) {
        t.pivot(i, col);
        basis[i] = col;
        ++sol.pivots;
        ++i;
      } else {
        t.erase_row(i);
        basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(i));
        origin.erase(origin.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
    for (std::size_t j = 0; j < ncols; ++j)
      if (kind[j] == ColKind::Artificial) may_enter[j] = false;
  }

  // Phase 2.
  const std::size_t rows_left = t.rows();
  for (std::size_t j = 0; j <= ncols; ++j) t.at(rows_left, j) = j < n ? lp.c[j] : 0.0;
  for (std::size_t i = 0; i < rows_left; ++i) {
    const std::size_t b = basis[i];
    const double cb = b < n ? lp.c[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= ncols; ++j) t.at(rows_left, j) -= cb * t.at(i, j);
  }
  if (!run_simplex(t, basis, may_enter, sol.pivots)) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  sol.status = LpStatus::Optimal;
  std::vector<double> xs(ncols, 0.0);
  for (std::size_t i = 0; i < rows_left; ++i) xs[basis[i]] = t.rhs(i);
  sol.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) sol.x[j] = lp.boxes[j].lower + xs[j];
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.c[j] * sol.x[j];

  // pi_i = -(reduced cost of the row's initial unit column); unit columns have
  // zero phase-2 cost. Rows removed as redundant keep a zero multiplier.
  sol.row_duals.assign(lp.rows.size(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (std_rows[i].origin == npos) continue;
    double pi = -t.cost(unit_col[i]);
    if (std_rows[i].flipped) pi = -pi;
    sol.row_duals[std_rows[i].origin] = pi;
  }
  sol.reduced_costs = lp.c;
  for (std::size_t i = 0; i < lp.rows.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) sol.reduced_costs[j] -= lp.rows[i].coeffs[j] * sol.row_duals[i];
  return sol;
}

double dual_objective(const LinearProgramData& lp, const LpSolution& solution) {
  double value = 0.0;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) value += lp.rows[i].rhs * solution.row_duals[i];
  for (std::size_t j = 0; j < lp.dimension(); ++j) {
    const double r = solution.reduced_costs[j];
    if (r >= 0.0)
      value += r * lp.boxes[j].lower;
    else if (std::isfinite(lp.boxes[j].upper))
      value += r * lp.boxes[j].upper;
    else
      return -std::numeric_limits<double>::infinity();
  }
  return value;
}

double lp_violation(const LinearProgramData& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < lp.dimension(); ++j)
    worst = std::max({worst, lp.boxes[j].lower - x[j], x[j] - lp.boxes[j].upper});
  for (const LinearRow& r : lp.rows) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < lp.dimension(); ++j) lhs += r.coeffs[j] * x[j];
    const double d = lhs - r.rhs;
    switch (r.relation) {
      case RowRelation::LessEqual: worst = std::max(worst, d); break;
      case RowRelation::GreaterEqual: worst = std::max(worst, -d); break;
      case RowRelation::Equal: worst = std::max(worst, std::abs(d)); break;
    }
  }
  return worst;
}

}  // namespace bileveler
