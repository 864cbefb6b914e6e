#include "bileveler/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace bileveler {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// JSON has no infinities; non-finite values are written as strings.
ordered_json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

ordered_json vec(const std::vector<double>& v) {
  ordered_json out = ordered_json::array();
  for (double d : v) out.push_back(num(d));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string point(const std::vector<double>& v, const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if (names.size() == v.size()) out += names[i] + "=";
    out += fmt(v[i]);
  }
  return "(" + out + ")";
}

}  // namespace

std::string report_record(const SolveReport& r, const std::vector<std::pair<std::string, std::string>>& context) {
  ordered_json j;
  j["record"] = "solve_report";
  for (const auto& [k, v] : context) j[k] = v;
  j["method"] = r.method;
  j["status"] = std::string(to_string(r.status));
  j["x"] = vec(r.x);
  j["y"] = vec(r.y);
  j["F_value"] = num(r.F_value);
  j["f_value"] = num(r.f_value);
  j["max_violation"] = num(r.max_violation);
  j["lower_solves"] = r.lower_solves;
  j["upper_evals"] = r.upper_evals;
  j["wall_ms"] = r.wall_ms;
  j["seed"] = r.seed;
  j["flags"] = r.flags;
  j["diagnostics"] = ordered_json::object();
  for (const auto& [k, v] : r.diagnostics) j["diagnostics"][k] = v;
  return j.dump();
}

std::string check_report_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    return "not valid JSON";
  }
  if (!j.is_object()) return "record is not an object";
  if (j.value("record", "") != "solve_report") return "record kind is not solve_report";
  auto is_real = [](const json& v) {
    return v.is_number() || (v.is_string() && (v == "inf" || v == "-inf" || v == "nan"));
  };
  for (const char* k : {"method", "status"})
    if (!j.contains(k) || !j[k].is_string()) return std::string("missing string field ") + k;
  static const std::vector<std::string> statuses{"optimal", "feasible", "infeasible", "budget_exceeded"};
  if (std::find(statuses.begin(), statuses.end(), j["status"].get<std::string>()) == statuses.end())
    return "unknown status";
  for (const char* k : {"x", "y"}) {
    if (!j.contains(k) || !j[k].is_array()) return std::string("missing array field ") + k;
    for (const auto& v : j[k])
      if (!is_real(v)) return std::string("non-numeric entry in ") + k;
  }
  for (const char* k : {"F_value", "f_value", "max_violation"})
    if (!j.contains(k) || !is_real(j[k])) return std::string("missing numeric field ") + k;
  for (const char* k : {"lower_solves", "upper_evals", "seed"})
    if (!j.contains(k) || !j[k].is_number_unsigned()) return std::string("missing counter field ") + k;
  if (!j.contains("wall_ms") || !j["wall_ms"].is_number_integer()) return "missing integer field wall_ms";
  if (!j.contains("flags") || !j["flags"].is_array()) return "missing array field flags";
  for (const auto& f : j["flags"])
    if (!f.is_string()) return "non-string flag";
  if (!j.contains("diagnostics") || !j["diagnostics"].is_object()) return "missing object field diagnostics";
  for (const auto& [k, v] : j["diagnostics"].items())
    if (!v.is_number_integer()) return "non-integer diagnostic " + k;
  return {};
}

std::string report_text(const SolveReport& r, const std::vector<std::string>& x_names,
                        const std::vector<std::string>& y_names) {
  std::ostringstream os;
  os << "method:        " << r.method << "\n";
  os << "status:        " << to_string(r.status) << "\n";
  if (!r.x.empty() || r.succeeded()) os << "x:             " << point(r.x, x_names) << "\n";
  if (!r.y.empty()) os << "y:             " << point(r.y, y_names) << "\n";
  os << "F:             " << fmt(r.F_value) << "\n";
  os << "f:             " << fmt(r.f_value) << "\n";
  os << "max violation: " << fmt(r.max_violation) << "\n";
  os << "evaluations:   upper " << r.upper_evals << ", lower " << r.lower_solves << "\n";
  os << "seed:          " << r.seed << "\n";
  os << "wall time:     " << r.wall_ms << " ms\n";
  for (const std::string& f : r.flags) os << "flag:          " << f << "\n";
  for (const auto& [k, v] : r.diagnostics) os << "  " << k << " = " << v << "\n";
  return os.str();
}

}  // namespace bileveler
