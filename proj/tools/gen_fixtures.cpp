// Writes fixtures/<name>.json for every catalog entry plus
// fixtures/reference_solutions.json with grid-oracle results.
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "bileveler/fixtures.hpp"
#include "bileveler/oracle.hpp"
#include "bileveler/problem_io.hpp"
#include "bileveler/reference.hpp"

using namespace bileveler;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_fixtures <fixtures-dir>\n";
    return 1;
  }
  const std::string dir = argv[1];
  for (const fixtures::CatalogEntry& e : fixtures::catalog()) {
    const AnyProblem p = std::visit([](const auto& q) { return AnyProblem(q); }, e.problem);
    std::ofstream(dir + "/" + e.name + ".json") << serialize_problem(p);
  }
  std::ofstream(dir + "/reference_solutions.json") << compute_reference_solutions().dump(2) << "\n";
  return 0;
}
