#include "bileveler/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <optional>
#include <thread>

#include "bileveler/error.hpp"
#include "flat_poly.hpp"

namespace bileveler {
namespace {

using detail::FlatPoly;
using detail::Interval;

constexpr std::size_t kLeafPoints = 32;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct FlatConstraint {
  FlatPoly poly;
  bool equality = false;
};

std::vector<FlatConstraint> flatten(const std::vector<Constraint>& cs) {
  std::vector<FlatConstraint> out;
  for (const Constraint& c : cs) out.push_back({FlatPoly(c.expr), c.relation == Relation::Equal});
  return out;
}

bool satisfied(const FlatConstraint& c, double value, double eps) {
  return c.equality ? std::abs(value) <= eps : value <= eps;
}

bool box_infeasible(const FlatConstraint& c, const Interval& range, double eps) {
  return range.lo > eps || (c.equality && range.hi < -eps);
}

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Half-open index ranges over a set of grid axes.
struct IndexBox {
  std::vector<std::size_t> begin;
  std::vector<std::size_t> end;

  double count() const {
    double c = 1.0;
    for (std::size_t k = 0; k < begin.size(); ++k) c *= static_cast<double>(end[k] - begin[k]);
    return c;
  }
};

using Axes = std::vector<std::vector<double>>;

void box_intervals(const Axes& axes, const IndexBox& box, Interval* out) {
  for (std::size_t k = 0; k < axes.size(); ++k) out[k] = {axes[k][box.begin[k]], axes[k][box.end[k] - 1]};
}

// Visits every point of the box in lexicographic index order.
template <class Visit>
void enumerate(const Axes& axes, const IndexBox& box, std::vector<double>& point, std::size_t offset, Visit&& visit) {
  const std::size_t d = axes.size();
  std::vector<std::size_t> idx = box.begin;
  for (std::size_t k = 0; k < d; ++k) point[offset + k] = axes[k][idx[k]];
  for (;;) {
    visit();
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++idx[k] < box.end[k]) {
        point[offset + k] = axes[k][idx[k]];
        break;
      }
      idx[k] = box.begin[k];
      point[offset + k] = axes[k][idx[k]];
      if (k == 0) return;
    }
    if (d == 0) return;
  }
}

// Depth-first box search. `bound` returns nullopt to prune a box, otherwise
// a key; the child with the smaller key is explored first and the sibling's
// bound is re-evaluated afterwards against the improved incumbent.
template <class Bound, class Leaf>
void search(IndexBox box, Bound& bound, Leaf& leaf, bool prune) {
  if (box.count() <= static_cast<double>(kLeafPoints)) {
    leaf(box);
    return;
  }
  std::size_t axis = 0;
  for (std::size_t k = 1; k < box.begin.size(); ++k)
    if (box.end[k] - box.begin[k] > box.end[axis] - box.begin[axis]) axis = k;
  const std::size_t mid = box.begin[axis] + (box.end[axis] - box.begin[axis]) / 2;
  IndexBox a = box, b = box;
  a.end[axis] = mid;
  b.begin[axis] = mid;
  if (!prune) {
    search(std::move(a), bound, leaf, prune);
    search(std::move(b), bound, leaf, prune);
    return;
  }
  std::optional<double> ka = bound(a), kb = bound(b);
  if (ka && kb && *kb < *ka) {
    std::swap(a, b);
    std::swap(ka, kb);
  }
  if (ka) search(std::move(a), bound, leaf, prune);
  if (kb && bound(b)) search(std::move(b), bound, leaf, prune);
}

template <class Bound, class Leaf>
void search_root(IndexBox root, Bound& bound, Leaf& leaf, bool prune) {
  if (root.count() == 0.0) return;
  if (prune && !bound(root)) return;
  search(std::move(root), bound, leaf, prune);
}

IndexBox full_box(const Axes& axes) {
  IndexBox b;
  for (const auto& a : axes) {
    b.begin.push_back(0);
    b.end.push_back(a.size());
  }
  return b;
}

Axes make_axes(const std::vector<VariableDef>& vars, std::size_t ppa) {
  Axes axes;
  for (const VariableDef& v : vars) axes.push_back(grid_axis(v, ppa));
  return axes;
}

double nominal_points(const Axes& axes) {
  double n = 1.0;
  for (const auto& a : axes) n *= static_cast<double>(a.size());
  return n;
}

// Lower-level problem instantiated at one upper point x.
class LowerInstance {
 public:
  LowerInstance(const BilevelProblem& p, std::span<const double> x, const Axes& axes, const GridSpec& grid)
      : axes_(axes), grid_(grid), y_(p.n_lower()), box_(p.n_lower()) {
    std::vector<std::optional<double>> values(p.dimension());
    std::vector<std::size_t> index(p.dimension(), 0);
    for (std::size_t i = 0; i < p.n_upper(); ++i) values[i] = x[i];
    for (std::size_t j = 0; j < p.n_lower(); ++j) index[p.n_upper() + j] = j;
    f_ = FlatPoly(p.lower_objective.substitute(values, index));
    F_ = FlatPoly(p.upper_objective.substitute(values, index));
    for (const Constraint& c : p.lower_constraints)
      g_.push_back({FlatPoly(c.expr.substitute(values, index)), c.relation == Relation::Equal});
  }

  bool feasible_here() const {
    for (const FlatConstraint& c : g_)
      if (!satisfied(c, c.poly.eval(y_.data()), grid_.eps_g)) return false;
    return true;
  }

  bool box_feasible(const IndexBox& box) {
    box_intervals(axes_, box, box_.data());
    for (const FlatConstraint& c : g_)
      if (box_infeasible(c, c.poly.bound(box_.data()), grid_.eps_g)) return false;
    return true;
  }

  // Minimum of f over the feasible lower grid, or nullopt if empty.
  std::optional<double> phi() {
    double best = kInf;
    auto bound = [&](const IndexBox& box) -> std::optional<double> {
      if (!box_feasible(box)) return std::nullopt;
      const Interval r = f_.bound(box_.data());
      if (r.lo >= best) return std::nullopt;
      return r.lo;
    };
    auto leaf = [&](const IndexBox& box) {
      enumerate(axes_, box, y_, 0, [&] {
        ++evaluated;
        if (!feasible_here()) return;
        best = std::min(best, f_.eval(y_.data()));
      });
    };
    search_root(full_box(axes_), bound, leaf, !grid_.exhaustive);
    if (best == kInf) return std::nullopt;
    return best;
  }

  // Member of the reaction set selected by position (lexicographic ties).
  std::pair<std::vector<double>, double> choose(double phi, Position position) {
    const double threshold = grid_.member_threshold(phi);
    const bool optimistic = position == Position::Optimistic;
    std::vector<double> best_y;
    double best_F = optimistic ? kInf : -kInf;
    bool have = false;
    auto bound = [&](const IndexBox& box) -> std::optional<double> {
      if (!box_feasible(box)) return std::nullopt;
      if (f_.bound(box_.data()).lo > threshold) return std::nullopt;
      const Interval r = F_.bound(box_.data());
      if (have && (optimistic ? r.lo > best_F : r.hi < best_F)) return std::nullopt;
      return optimistic ? r.lo : -r.hi;
    };
    auto leaf = [&](const IndexBox& box) {
      enumerate(axes_, box, y_, 0, [&] {
        ++evaluated;
        if (!feasible_here() || f_.eval(y_.data()) > threshold) return;
        const double Fv = F_.eval(y_.data());
        const bool better = !have || (optimistic ? Fv < best_F : Fv > best_F) ||
                            (Fv == best_F && lex_less(y_, best_y));
        if (better) {
          have = true;
          best_F = Fv;
          best_y = y_;
        }
      });
    };
    search_root(full_box(axes_), bound, leaf, !grid_.exhaustive);
    return {best_y, best_F};
  }

  std::uint64_t evaluated = 0;

 private:
  const Axes& axes_;
  const GridSpec& grid_;
  FlatPoly f_, F_;
  std::vector<FlatConstraint> g_;
  std::vector<double> y_;
  std::vector<Interval> box_;
};

struct Candidate {
  bool found = false;
  std::vector<double> x, y;
  double F = kInf, f = 0.0;

  bool beats(const Candidate& o) const {
    if (!found) return false;
    if (!o.found) return true;
    if (F != o.F) return F < o.F;
    return lex_less(x, o.x);
  }
};

struct UpperStats {
  std::uint64_t x_visited = 0;
  std::uint64_t empty_lower = 0;
  std::uint64_t upper_infeasible = 0;
  std::uint64_t lower_points = 0;
  std::uint64_t reactions = 0;
};

void search_upper(const BilevelProblem& p, const Axes& upper_axes, const Axes& lower_axes, const GridSpec& grid,
                  IndexBox root, Candidate& best, UpperStats& stats) {
  const FlatPoly F(p.upper_objective);
  const std::vector<FlatConstraint> G = flatten(p.upper_constraints);
  const std::size_t n = p.n_upper(), m = p.n_lower();
  std::vector<Interval> box(n + m);
  for (std::size_t j = 0; j < m; ++j) box[n + j] = {lower_axes[j].front(), lower_axes[j].back()};
  std::vector<double> x(n);

  auto bound = [&](const IndexBox& b) -> std::optional<double> {
    box_intervals(upper_axes, b, box.data());
    for (const FlatConstraint& c : G)
      if (box_infeasible(c, c.poly.bound(box.data()), grid.eps_g)) return std::nullopt;
    const Interval r = F.bound(box.data());
    if (best.found && r.lo > best.F) return std::nullopt;
    return r.lo;
  };
  auto leaf = [&](const IndexBox& b) {
    enumerate(upper_axes, b, x, 0, [&] {
      ++stats.x_visited;
      LowerInstance lower(p, x, lower_axes, grid);
      const std::optional<double> phi = lower.phi();
      if (!phi) {
        ++stats.empty_lower;
        stats.lower_points += lower.evaluated;
        return;
      }
      ++stats.reactions;
      auto [y, Fv] = lower.choose(*phi, p.position);
      stats.lower_points += lower.evaluated;
      const std::vector<double> point = p.join(x, y);
      for (const FlatConstraint& c : G)
        if (!satisfied(c, c.poly.eval(point.data()), grid.eps_g)) {
          ++stats.upper_infeasible;
          return;
        }
      Candidate cand{true, x, y, Fv, *phi};
      if (cand.beats(best)) best = std::move(cand);
    });
  };
  search_root(std::move(root), bound, leaf, !grid.exhaustive);
}

}  // namespace

void GridSpec::validate() const {
  if (points_per_axis < 2) throw Error(ErrorCode::Structural, "grid needs at least 2 points per axis");
  if (!(eps_f > 0.0) || !(eps_g > 0.0)) throw Error(ErrorCode::Structural, "grid tolerances must be positive");
  if (workers == 0) throw Error(ErrorCode::Structural, "grid needs at least one worker");
}

std::vector<double> grid_axis(const VariableDef& v, std::size_t points_per_axis) {
  if (v.lower == v.upper) return {v.lower};
  std::vector<double> axis(points_per_axis);
  const double span = v.upper - v.lower;
  const double steps = static_cast<double>(points_per_axis - 1);
  for (std::size_t i = 0; i < points_per_axis; ++i) axis[i] = v.lower + span * (static_cast<double>(i) / steps);
  axis.back() = v.upper;
  return axis;
}

std::vector<std::vector<double>> lower_feasible_set(const BilevelProblem& problem, std::span<const double> x,
                                                    const GridSpec& grid) {
  grid.validate();
  if (x.size() != problem.n_upper()) throw Error(ErrorCode::DimensionMismatch, "x does not match upper dimension");
  const Axes axes = make_axes(problem.lower_vars, grid.points_per_axis);
  if (nominal_points(axes) > grid.max_points)
    throw Error(ErrorCode::BudgetExceeded, "lower grid exceeds the point budget");
  LowerInstance lower(problem, x, axes, grid);
  std::vector<std::vector<double>> out;
  std::vector<double> y(problem.n_lower());
  enumerate(axes, full_box(axes), y, 0, [&] {
    const std::vector<double> point = problem.join(x, y);
    for (const Constraint& c : problem.lower_constraints) {
      const double v = c.expr.evaluate(point);
      if (c.relation == Relation::Equal ? std::abs(v) > grid.eps_g : v > grid.eps_g) return;
    }
    out.push_back(y);
  });
  return out;
}

ReactionSet reaction_set(const BilevelProblem& problem, std::span<const double> x, const GridSpec& grid) {
  const std::vector<std::vector<double>> feasible = lower_feasible_set(problem, x, grid);
  if (feasible.empty()) throw Error(ErrorCode::EmptyLowerFeasible, "no lower grid point is feasible for this x");
  std::vector<double> values;
  values.reserve(feasible.size());
  double phi = kInf;
  for (const auto& y : feasible) {
    values.push_back(problem.lower_objective.evaluate(problem.join(x, y)));
    phi = std::min(phi, values.back());
  }
  ReactionSet rs{std::vector<double>(x.begin(), x.end()), {}, phi};
  const double threshold = grid.member_threshold(phi);
  for (std::size_t k = 0; k < feasible.size(); ++k)
    if (values[k] <= threshold) rs.members.push_back(feasible[k]);
  return rs;
}

std::vector<double> choose(const ReactionSet& reaction, const PolyExpression& F, Position position) {
  if (reaction.members.empty()) throw Error(ErrorCode::EmptyLowerFeasible, "choose on an empty reaction set");
  const bool optimistic = position == Position::Optimistic;
  const std::vector<double>* best = nullptr;
  double best_F = 0.0;
  std::vector<double> point = reaction.x;
  for (const auto& y : reaction.members) {
    point.resize(reaction.x.size());
    point.insert(point.end(), y.begin(), y.end());
    const double v = F.evaluate(point);
    if (!best || (optimistic ? v < best_F : v > best_F) || (v == best_F && lex_less(y, *best))) {
      best = &y;
      best_F = v;
    }
  }
  return *best;
}

SolveReport solve_bilevel_grid(const BilevelProblem& problem, const GridSpec& grid) {
  const auto start = std::chrono::steady_clock::now();
  problem.validate();
  grid.validate();
  SolveReport report;
  report.method = "oracle";
  const Axes upper_axes = make_axes(problem.upper_vars, grid.points_per_axis);
  const Axes lower_axes = make_axes(problem.lower_vars, grid.points_per_axis);
  if (nominal_points(upper_axes) * nominal_points(lower_axes) > grid.max_points) {
    report.status = SolveStatus::BudgetExceeded;
    report.flags.push_back("grid-budget");
    return report;
  }

  // Partition the first upper axis into contiguous chunks, one per worker.
  const IndexBox root = full_box(upper_axes);
  std::vector<IndexBox> chunks;
  const std::size_t workers = problem.n_upper() == 0 ? 1 : std::min(grid.workers, upper_axes[0].size());
  for (std::size_t w = 0; w < workers; ++w) {
    IndexBox c = root;
    if (problem.n_upper() > 0) {
      const std::size_t len = upper_axes[0].size();
      c.begin[0] = len * w / workers;
      c.end[0] = len * (w + 1) / workers;
    }
    chunks.push_back(std::move(c));
  }
  std::vector<Candidate> bests(workers);
  std::vector<UpperStats> stats(workers);
  if (workers == 1) {
    search_upper(problem, upper_axes, lower_axes, grid, chunks[0], bests[0], stats[0]);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w)
      threads.emplace_back([&, w] { search_upper(problem, upper_axes, lower_axes, grid, chunks[w], bests[w], stats[w]); });
    for (auto& t : threads) t.join();
  }
  Candidate best;
  UpperStats total;
  for (std::size_t w = 0; w < workers; ++w) {
    if (bests[w].beats(best)) best = bests[w];
    total.x_visited += stats[w].x_visited;
    total.empty_lower += stats[w].empty_lower;
    total.upper_infeasible += stats[w].upper_infeasible;
    total.lower_points += stats[w].lower_points;
    total.reactions += stats[w].reactions;
  }

  report.lower_solves = total.x_visited;
  report.upper_evals = total.reactions;
  report.diagnostics["upper_points_visited"] = static_cast<std::int64_t>(total.x_visited);
  report.diagnostics["empty_lower_sets"] = static_cast<std::int64_t>(total.empty_lower);
  report.diagnostics["upper_infeasible_choices"] = static_cast<std::int64_t>(total.upper_infeasible);
  report.diagnostics["lower_points_evaluated"] = static_cast<std::int64_t>(total.lower_points);
  report.diagnostics["points_per_axis"] = static_cast<std::int64_t>(grid.points_per_axis);
  if (best.found) {
    report.status = SolveStatus::Optimal;
    report.x = best.x;
    report.y = best.y;
    report.F_value = best.F;
    report.f_value = best.f;
    report.max_violation = std::max(problem.upper_violation(best.x, best.y), problem.lower_violation(best.x, best.y));
  } else {
    report.status = SolveStatus::Infeasible;
  }
  report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SolveReport solve_single_grid(const SingleLevelProblem& problem, const GridSpec& grid) {
  problem.validate();
  BilevelProblem wrapped;
  wrapped.upper_vars = problem.variables;
  wrapped.upper_objective = problem.objective;
  wrapped.upper_constraints = problem.constraints;
  SolveReport report = solve_bilevel_grid(wrapped, grid);
  report.y.clear();
  report.f_value = 0.0;
  if (report.succeeded()) report.max_violation = problem.max_violation(report.x);
  return report;
}

}  // namespace bileveler
