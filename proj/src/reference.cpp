#include "bileveler/reference.hpp"

#include <map>

#include "bileveler/error.hpp"
#include "bileveler/fixtures.hpp"
#include "bileveler/oracle.hpp"

namespace bileveler {

std::size_t reference_grid(const std::string& fixture) {
  static const std::map<std::string, std::size_t> grids = {
      {"bobd-paper-example", 101}, {"lb1", 201},      {"degenerate-follower", 11},
      {"ridge-nas-demo", 101},     {"randlin-1", 41}, {"scal-4", 41},
  };
  const auto it = grids.find(fixture);
  if (it == grids.end()) throw Error(ErrorCode::Structural, "no reference grid for '" + fixture + "'");
  return it->second;
}

nlohmann::ordered_json compute_reference_solutions() {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  auto entry = [](const SolveReport& r, std::size_t grid) {
    nlohmann::ordered_json j;
    j["grid"] = grid;
    j["status"] = to_string(r.status);
    j["F"] = r.F_value;
    j["x"] = r.x;
    j["y"] = r.y;
    return j;
  };
  for (const fixtures::CatalogEntry& e : fixtures::catalog()) {
    GridSpec g;
    g.points_per_axis = reference_grid(e.name);
    if (const auto* s = std::get_if<SingleLevelProblem>(&e.problem)) {
      out[e.name]["single"] = entry(solve_single_grid(*s, g), g.points_per_axis);
      continue;
    }
    BilevelProblem b = std::get<BilevelProblem>(e.problem);
    for (Position pos : {Position::Optimistic, Position::Pessimistic}) {
      b.position = pos;
      out[e.name][pos == Position::Optimistic ? "optimistic" : "pessimistic"] =
          entry(solve_bilevel_grid(b, g), g.points_per_axis);
    }
  }
  return out;
}

}  // namespace bileveler
