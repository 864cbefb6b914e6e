#pragma once

#include <string>
#include <variant>

#include "bileveler/problem.hpp"
#include "bileveler/reduce.hpp"

namespace bileveler {

using AnyProblem = std::variant<SingleLevelProblem, BilevelProblem, MpecProblem>;

inline constexpr int kSchemaVersion = 1;

// JSON problem files. Errors carry a line:column for malformed text and a
// JSON-pointer-style field path for everything else.
AnyProblem parse_problem_text(const std::string& text, const std::string& source = "<input>");
AnyProblem parse_problem_file(const std::string& path);

// Canonical form: parse(serialize(p)) == p.
std::string serialize_problem(const AnyProblem& problem);

}  // namespace bileveler
