#include <doctest.h>

#include <random>

#include "bileveler/error.hpp"
#include "bileveler/fixtures.hpp"
#include "bileveler/problem_io.hpp"
#include "bileveler/reduce.hpp"

using namespace bileveler;

namespace {

ErrorCode code_of(const std::string& text, std::string* message = nullptr) {
  try {
    parse_problem_text(text, "t.json");
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::Usage;
}

const char* kSmall = R"({
  "schema_version": 1,
  "variables": [{"name": "x", "lower": 0, "upper": 4}, {"name": "z", "lower": -1, "upper": 1}],
  "objective": {"constant": 1, "terms": [{"coeff": 2, "factors": [{"var": "x", "power": 2}]}]},
  "constraints": [{"name": "c", "expr": {"terms": [{"coeff": 1, "factors": [{"var": "x"}, {"var": "z"}]}]},
                   "relation": ">=", "rhs": 0.5}]
})";

}  // namespace

TEST_CASE("parse a single-level file") {
  const AnyProblem a = parse_problem_text(kSmall);
  const auto& p = std::get<SingleLevelProblem>(a);
  CHECK(p.dimension() == 2);
  CHECK(p.variables[1] == VariableDef{"z", -1, 1});
  CHECK(p.objective.evaluate(std::vector<double>{3, 0}) == 19.0);
  REQUIRE(p.constraints.size() == 1);
  CHECK(p.constraints[0].name == "c");
  CHECK(p.constraints[0].relation == Relation::LessEqual);
  // x z >= 0.5 is stored as 0.5 - x z <= 0
  CHECK(p.constraints[0].expr.evaluate(std::vector<double>{1, 1}) == -0.5);
}

TEST_CASE("round trip through the file format") {
  for (const fixtures::CatalogEntry& e : fixtures::catalog()) {
    const AnyProblem p = std::visit([](const auto& q) { return AnyProblem(q); }, e.problem);
    const std::string text = serialize_problem(p);
    const AnyProblem back = parse_problem_text(text);
    CHECK_MESSAGE(back == p, e.name);
    CHECK(serialize_problem(back) == text);
  }
  const MpecProblem m = kkt_reduce(fixtures::lb1());
  const AnyProblem back = parse_problem_text(serialize_problem(m));
  REQUIRE(std::holds_alternative<MpecProblem>(back));
  const MpecProblem& mb = std::get<MpecProblem>(back);
  CHECK(mb.base.variables == m.base.variables);
  CHECK(mb.complementarity_pairs == m.complementarity_pairs);
  CHECK(mb.lower_objective == m.lower_objective);
  CHECK(mb.n_upper == m.n_upper);
  CHECK(mb.n_lower == m.n_lower);
}

TEST_CASE("variables are grouped by level in file order") {
  const AnyProblem a = parse_problem_text(R"({
    "schema_version": 1,
    "variables": [{"name": "y", "lower": 0, "upper": 1, "level": "lower"},
                  {"name": "x", "lower": 0, "upper": 2, "level": "upper"},
                  {"name": "w", "lower": 0, "upper": 3, "level": "lower"}],
    "objective": {"terms": [{"coeff": 1, "factors": [{"var": "w"}]}]},
    "bilevel": {"position": "pessimistic", "lower_objective": {"terms": [{"coeff": 1, "factors": [{"var": "y"}]}]}}
  })");
  const auto& p = std::get<BilevelProblem>(a);
  CHECK(p.position == Position::Pessimistic);
  REQUIRE(p.upper_vars.size() == 1);
  CHECK(p.upper_vars[0].name == "x");
  REQUIRE(p.lower_vars.size() == 2);
  CHECK(p.lower_vars[0].name == "y");
  CHECK(p.lower_vars[1].name == "w");
  CHECK(p.upper_objective.evaluate(std::vector<double>{0, 0, 7}) == 7.0);
}

TEST_CASE(">= constraints keep their feasible set") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = u(rng), b = u(rng), rhs = u(rng);
    for (const char* rel : {">=", "<=", "=="}) {
      const std::string text = std::string(R"({"schema_version": 1,
        "variables": [{"name": "x", "lower": -3, "upper": 3}, {"name": "z", "lower": -3, "upper": 3}],
        "objective": {},
        "constraints": [{"expr": {"terms": [{"coeff": )") + std::to_string(a) +
                               R"(, "factors": [{"var": "x"}]}, {"coeff": )" + std::to_string(b) +
                               R"(, "factors": [{"var": "z", "power": 2}]}]}, "relation": ")" + rel +
                               R"(", "rhs": )" + std::to_string(rhs) + "}]}";
      const auto p = std::get<SingleLevelProblem>(parse_problem_text(text));
      const double pa = std::stod(std::to_string(a)), pb = std::stod(std::to_string(b)),
                   pr = std::stod(std::to_string(rhs));
      const std::vector<double> pt{u(rng), u(rng)};
      const double lhs = pa * pt[0] + pb * pt[1] * pt[1];
      const bool want = std::string(rel) == ">=" ? lhs >= pr + 1e-9 : std::string(rel) == "<=" ? lhs <= pr - 1e-9 : false;
      if (std::string(rel) == "==") {
        CHECK(std::abs(p.constraints[0].expr.evaluate(pt)) == doctest::Approx(std::abs(lhs - pr)));
      } else if (std::abs(lhs - pr) > 1e-9) {
        CHECK((p.constraints[0].expr.evaluate(pt) <= 0) == want);
      }
    }
  }
}

TEST_CASE("parse errors carry a code and a location") {
  std::string msg;
  CHECK(code_of("{\n  \"schema_version\": 1,\n  oops\n}", &msg) == ErrorCode::SyntaxError);
  CHECK(msg.find("t.json:3:") != std::string::npos);

  std::string bad = kSmall;
  bad.replace(bad.find("\"relation\""), 10, "\"relatoin\"");
  CHECK(code_of(bad, &msg) == ErrorCode::SyntaxError);
  CHECK(msg.find("/constraints/0/relatoin") != std::string::npos);

  CHECK(code_of(R"({"schema_version": 2, "variables": [], "objective": {}})") == ErrorCode::SyntaxError);
  CHECK(code_of(R"({"schema_version": 1, "variables": [{"name": "x", "lower": 0}], "objective": {}})", &msg) ==
        ErrorCode::UnboundedVariable);
  CHECK(msg.find("/variables/0/upper") != std::string::npos);
  CHECK(code_of(R"({"schema_version": 1, "variables": [{"name": "x", "lower": null, "upper": 1}], "objective": {}})") ==
        ErrorCode::UnboundedVariable);
  CHECK(code_of(R"({"schema_version": 1, "variables": [{"name": "x", "lower": 0, "upper": 1, "type": "integer"}],
                    "objective": {}})") == ErrorCode::IntegerVariableUnsupported);
  CHECK(code_of(R"({"schema_version": 1, "variables": [{"name": "x", "lower": 0, "upper": 1, "type": "binary"}],
                    "objective": {}})") == ErrorCode::IntegerVariableUnsupported);
  CHECK(code_of(R"({"schema_version": 1, "variables": [{"name": "x", "lower": 0, "upper": 1},
                    {"name": "x", "lower": 0, "upper": 1}], "objective": {}})") == ErrorCode::DuplicateName);
  CHECK(code_of(R"({"schema_version": 1, "variables": [{"name": "x", "lower": 0, "upper": 1}],
                    "objective": {"terms": [{"coeff": 1, "factors": [{"var": "q"}]}]}})", &msg) == ErrorCode::SyntaxError);
  CHECK(msg.find("/objective/terms/0/factors/0/var") != std::string::npos);
  CHECK(code_of(R"({"schema_version": 1, "variables": [{"name": "x", "lower": 0, "upper": 1, "level": "lower"}],
                    "objective": {}})") == ErrorCode::SyntaxError);
}

TEST_CASE("missing files") {
  try {
    parse_problem_file("/nonexistent/problem.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
  }
}
