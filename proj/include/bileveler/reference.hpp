#pragma once

#include <json.hpp>

namespace bileveler {

// Grid-oracle solutions for the fixture catalog, keyed by fixture name and
// position. Written to fixtures/reference_solutions.json and re-derived by the
// drift guard.
nlohmann::ordered_json compute_reference_solutions();

// Grid points per axis used for each catalog entry.
std::size_t reference_grid(const std::string& fixture);

}  // namespace bileveler
