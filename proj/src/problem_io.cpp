#include "bileveler/problem_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bileveler/error.hpp"

namespace bileveler {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Ctx {
  std::string source;

  [[noreturn]] void fail(ErrorCode code, const std::string& path, const std::string& what) const {
    throw Error(code, source + ": " + (path.empty() ? "/" : path) + ": " + what);
  }

  void only(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(ErrorCode::SyntaxError, path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail(ErrorCode::SyntaxError, path + "/" + key, "unknown field");
    }
  }

  const json& need(const json& obj, const std::string& path, const char* key) const {
    if (!obj.contains(key)) fail(ErrorCode::SyntaxError, path + "/" + key, "missing field");
    return obj.at(key);
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(ErrorCode::SyntaxError, path, "expected a number");
    return v.get<double>();
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(ErrorCode::SyntaxError, path, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(ErrorCode::SyntaxError, path, "expected an array");
    return v;
  }
};

PolyExpression parse_expr(const Ctx& ctx, const json& e, const std::string& path,
                          const std::map<std::string, std::size_t>& names) {
  ctx.only(e, path, {"constant", "terms"});
  const double constant = e.contains("constant") ? ctx.number(e["constant"], path + "/constant") : 0.0;
  std::vector<Monomial> terms;
  if (e.contains("terms")) {
    const json& ts = ctx.array(e["terms"], path + "/terms");
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const std::string tp = path + "/terms/" + std::to_string(k);
      ctx.only(ts[k], tp, {"coeff", "factors", "abs"});
      Monomial m;
      m.coeff = ctx.number(ctx.need(ts[k], tp, "coeff"), tp + "/coeff");
      if (ts[k].contains("abs")) {
        if (!ts[k]["abs"].is_boolean()) ctx.fail(ErrorCode::SyntaxError, tp + "/abs", "expected a boolean");
        m.modifier = ts[k]["abs"].get<bool>() ? Modifier::Abs : Modifier::None;
      }
      const json& fs = ctx.array(ctx.need(ts[k], tp, "factors"), tp + "/factors");
      for (std::size_t j = 0; j < fs.size(); ++j) {
        const std::string fp = tp + "/factors/" + std::to_string(j);
        ctx.only(fs[j], fp, {"var", "power"});
        const std::string var = ctx.string(ctx.need(fs[j], fp, "var"), fp + "/var");
        const auto it = names.find(var);
        if (it == names.end()) ctx.fail(ErrorCode::SyntaxError, fp + "/var", "unknown variable '" + var + "'");
        int power = 1;
        if (fs[j].contains("power")) {
          if (!fs[j]["power"].is_number_integer() || fs[j]["power"].get<int>() < 1)
            ctx.fail(ErrorCode::SyntaxError, fp + "/power", "expected an integer >= 1");
          power = fs[j]["power"].get<int>();
        }
        m.factors.push_back({it->second, power});
      }
      terms.push_back(std::move(m));
    }
  }
  return PolyExpression(constant, std::move(terms));
}

std::vector<Constraint> parse_constraints(const Ctx& ctx, const json& cs, const std::string& path,
                                          const std::map<std::string, std::size_t>& names) {
  std::vector<Constraint> out;
  ctx.array(cs, path);
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const std::string cp = path + "/" + std::to_string(k);
    ctx.only(cs[k], cp, {"name", "expr", "relation", "rhs"});
    PolyExpression e = parse_expr(ctx, ctx.need(cs[k], cp, "expr"), cp + "/expr", names);
    if (cs[k].contains("rhs")) e = e - PolyExpression(ctx.number(cs[k]["rhs"], cp + "/rhs"));
    const std::string rel = ctx.string(ctx.need(cs[k], cp, "relation"), cp + "/relation");
    Constraint c;
    c.name = cs[k].contains("name") ? ctx.string(cs[k]["name"], cp + "/name") : std::string();
    if (rel == "<=") {
      c.expr = std::move(e);
    } else if (rel == ">=") {
      c.expr = -e;
    } else if (rel == "==") {
      c.expr = std::move(e);
      c.relation = Relation::Equal;
    } else {
      ctx.fail(ErrorCode::SyntaxError, cp + "/relation", "expected one of <=, >=, ==");
    }
    out.push_back(std::move(c));
  }
  return out;
}

Position parse_position(const Ctx& ctx, const json& v, const std::string& path) {
  const std::string p = ctx.string(v, path);
  if (p == "optimistic") return Position::Optimistic;
  if (p == "pessimistic") return Position::Pessimistic;
  ctx.fail(ErrorCode::SyntaxError, path, "expected optimistic or pessimistic");
}

struct ParsedVar {
  VariableDef def;
  std::string level;
};

AnyProblem parse_json(const Ctx& ctx, const json& doc) {
  ctx.only(doc, "", {"schema_version", "variables", "objective", "constraints", "bilevel", "mpec"});
  const json& ver = ctx.need(doc, "", "schema_version");
  if (!ver.is_number_integer() || ver.get<int>() != kSchemaVersion)
    ctx.fail(ErrorCode::SyntaxError, "/schema_version", "unsupported schema version");
  if (doc.contains("bilevel") && doc.contains("mpec"))
    ctx.fail(ErrorCode::SyntaxError, "/mpec", "a file holds either a bilevel or an mpec section");

  std::vector<ParsedVar> vars;
  std::set<std::string> seen;
  const json& vs = ctx.array(ctx.need(doc, "", "variables"), "/variables");
  for (std::size_t k = 0; k < vs.size(); ++k) {
    const std::string vp = "/variables/" + std::to_string(k);
    ctx.only(vs[k], vp, {"name", "lower", "upper", "level", "type"});
    ParsedVar v;
    v.def.name = ctx.string(ctx.need(vs[k], vp, "name"), vp + "/name");
    if (v.def.name.empty()) ctx.fail(ErrorCode::SyntaxError, vp + "/name", "empty name");
    if (!seen.insert(v.def.name).second) ctx.fail(ErrorCode::DuplicateName, vp + "/name", "duplicate variable '" + v.def.name + "'");
    if (vs[k].contains("type")) {
      const std::string t = ctx.string(vs[k]["type"], vp + "/type");
      if (t == "integer" || t == "binary")
        ctx.fail(ErrorCode::IntegerVariableUnsupported, vp + "/type", "integer variables are not supported");
      if (t != "continuous") ctx.fail(ErrorCode::SyntaxError, vp + "/type", "unknown type '" + t + "'");
    }
    for (const char* side : {"lower", "upper"}) {
      if (!vs[k].contains(side) || vs[k][side].is_null())
        ctx.fail(ErrorCode::UnboundedVariable, vp + "/" + side, "variable '" + v.def.name + "' needs a finite bound");
      const json& b = vs[k][side];
      if (b.is_string()) ctx.fail(ErrorCode::UnboundedVariable, vp + "/" + side, "bounds must be finite numbers");
      (std::string(side) == "lower" ? v.def.lower : v.def.upper) = ctx.number(b, vp + "/" + side);
    }
    if (v.def.lower > v.def.upper) ctx.fail(ErrorCode::SyntaxError, vp, "lower bound exceeds upper bound");
    if (vs[k].contains("level")) v.level = ctx.string(vs[k]["level"], vp + "/level");
    vars.push_back(std::move(v));
  }

  const bool bilevel = doc.contains("bilevel"), mpec = doc.contains("mpec");
  std::vector<std::string> order;
  if (bilevel || mpec) order = {"upper", "lower"};
  if (mpec) order.push_back("multiplier");
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const std::string lp = "/variables/" + std::to_string(k) + "/level";
    if (order.empty()) {
      if (!vars[k].level.empty()) ctx.fail(ErrorCode::SyntaxError, lp, "level tags need a bilevel or mpec section");
    } else if (std::find(order.begin(), order.end(), vars[k].level) == order.end()) {
      ctx.fail(ErrorCode::SyntaxError, lp, vars[k].level.empty() ? "missing level tag" : "unknown level '" + vars[k].level + "'");
    }
  }

  // Internal order groups variables by level, keeping file order inside a level.
  std::vector<VariableDef> ordered;
  std::map<std::string, std::size_t> names;
  std::map<std::string, std::size_t> per_level;
  for (const std::string& level : order.empty() ? std::vector<std::string>{""} : order)
    for (const ParsedVar& v : vars)
      if (v.level == level) {
        names[v.def.name] = ordered.size();
        ordered.push_back(v.def);
        ++per_level[level];
      }

  const PolyExpression objective = parse_expr(ctx, ctx.need(doc, "", "objective"), "/objective", names);
  const std::vector<Constraint> constraints =
      doc.contains("constraints") ? parse_constraints(ctx, doc["constraints"], "/constraints", names) : std::vector<Constraint>{};

  if (bilevel) {
    const json& b = doc["bilevel"];
    ctx.only(b, "/bilevel", {"position", "lower_objective", "lower_constraints"});
    BilevelProblem p;
    p.upper_vars.assign(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(per_level["upper"]));
    p.lower_vars.assign(ordered.begin() + static_cast<std::ptrdiff_t>(per_level["upper"]), ordered.end());
    p.upper_objective = objective;
    p.upper_constraints = constraints;
    p.lower_objective = parse_expr(ctx, ctx.need(b, "/bilevel", "lower_objective"), "/bilevel/lower_objective", names);
    if (b.contains("lower_constraints"))
      p.lower_constraints = parse_constraints(ctx, b["lower_constraints"], "/bilevel/lower_constraints", names);
    if (b.contains("position")) p.position = parse_position(ctx, b["position"], "/bilevel/position");
    p.validate();
    return p;
  }
  if (mpec) {
    const json& m = doc["mpec"];
    ctx.only(m, "/mpec", {"lower_objective", "complementarity"});
    MpecProblem p;
    p.base.variables = ordered;
    p.base.objective = objective;
    p.base.constraints = constraints;
    p.n_upper = per_level["upper"];
    p.n_lower = per_level["lower"];
    p.lower_objective = parse_expr(ctx, ctx.need(m, "/mpec", "lower_objective"), "/mpec/lower_objective", names);
    std::map<std::string, std::size_t> cnames;
    for (std::size_t k = 0; k < constraints.size(); ++k)
      if (!constraints[k].name.empty() && !cnames.emplace(constraints[k].name, k).second)
        ctx.fail(ErrorCode::DuplicateName, "/constraints/" + std::to_string(k) + "/name",
                 "duplicate constraint '" + constraints[k].name + "'");
    const json& pairs = ctx.array(ctx.need(m, "/mpec", "complementarity"), "/mpec/complementarity");
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const std::string pp = "/mpec/complementarity/" + std::to_string(k);
      ctx.only(pairs[k], pp, {"multiplier", "constraint"});
      const std::string mv = ctx.string(ctx.need(pairs[k], pp, "multiplier"), pp + "/multiplier");
      const std::string cn = ctx.string(ctx.need(pairs[k], pp, "constraint"), pp + "/constraint");
      if (!names.count(mv)) ctx.fail(ErrorCode::SyntaxError, pp + "/multiplier", "unknown variable '" + mv + "'");
      if (!cnames.count(cn)) ctx.fail(ErrorCode::SyntaxError, pp + "/constraint", "unknown constraint '" + cn + "'");
      p.complementarity_pairs.push_back({names[mv], cnames[cn]});
    }
    try {
      p.validate();
    } catch (const Error& e) {
      ctx.fail(e.code(), "/mpec", e.what());
    }
    return p;
  }
  SingleLevelProblem p{ordered, objective, constraints};
  p.validate();
  return p;
}

ordered_json expr_json(const PolyExpression& e, const std::vector<VariableDef>& vars) {
  ordered_json out;
  out["constant"] = e.constant();
  out["terms"] = ordered_json::array();
  for (const Monomial& m : e.terms()) {
    ordered_json t;
    t["coeff"] = m.coeff;
    t["factors"] = ordered_json::array();
    for (const Factor& f : m.factors) t["factors"].push_back({{"var", vars.at(f.var).name}, {"power", f.power}});
    if (m.modifier == Modifier::Abs) t["abs"] = true;
    out["terms"].push_back(std::move(t));
  }
  return out;
}

ordered_json constraints_json(const std::vector<Constraint>& cs, const std::vector<VariableDef>& vars) {
  ordered_json out = ordered_json::array();
  for (const Constraint& c : cs) {
    ordered_json j;
    if (!c.name.empty()) j["name"] = c.name;
    j["expr"] = expr_json(c.expr, vars);
    j["relation"] = c.relation == Relation::Equal ? "==" : "<=";
    out.push_back(std::move(j));
  }
  return out;
}

ordered_json vars_json(const std::vector<VariableDef>& vars, const std::vector<std::string>& levels) {
  ordered_json out = ordered_json::array();
  for (std::size_t k = 0; k < vars.size(); ++k) {
    ordered_json v;
    v["name"] = vars[k].name;
    v["lower"] = vars[k].lower;
    v["upper"] = vars[k].upper;
    if (!levels.empty()) v["level"] = levels[k];
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

AnyProblem parse_problem_text(const std::string& text, const std::string& source) {
  const Ctx ctx{source};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::SyntaxError, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
  return parse_json(ctx, doc);
}

AnyProblem parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SyntaxError, path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str(), path);
}

std::string serialize_problem(const AnyProblem& problem) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  if (const auto* s = std::get_if<SingleLevelProblem>(&problem)) {
    doc["variables"] = vars_json(s->variables, {});
    doc["objective"] = expr_json(s->objective, s->variables);
    doc["constraints"] = constraints_json(s->constraints, s->variables);
  } else if (const auto* b = std::get_if<BilevelProblem>(&problem)) {
    const std::vector<VariableDef> all = b->all_vars();
    std::vector<std::string> levels(b->n_upper(), "upper");
    levels.resize(all.size(), "lower");
    doc["variables"] = vars_json(all, levels);
    doc["objective"] = expr_json(b->upper_objective, all);
    doc["constraints"] = constraints_json(b->upper_constraints, all);
    ordered_json bl;
    bl["position"] = b->position == Position::Optimistic ? "optimistic" : "pessimistic";
    bl["lower_objective"] = expr_json(b->lower_objective, all);
    bl["lower_constraints"] = constraints_json(b->lower_constraints, all);
    doc["bilevel"] = std::move(bl);
  } else {
    const auto& m = std::get<MpecProblem>(problem);
    const auto& vars = m.base.variables;
    std::vector<std::string> levels(m.n_upper, "upper");
    levels.resize(m.n_upper + m.n_lower, "lower");
    levels.resize(vars.size(), "multiplier");
    // Pairs reference constraints by name, so every constraint gets one.
    std::vector<Constraint> cs = m.base.constraints;
    std::set<std::string> taken;
    for (const Constraint& c : cs) taken.insert(c.name);
    for (std::size_t k = 0; k < cs.size(); ++k)
      if (cs[k].name.empty()) {
        std::string n = "c" + std::to_string(k + 1);
        while (taken.count(n)) n += "_";
        taken.insert(n);
        cs[k].name = n;
      }
    doc["variables"] = vars_json(vars, levels);
    doc["objective"] = expr_json(m.base.objective, vars);
    doc["constraints"] = constraints_json(cs, vars);
    ordered_json mp;
    mp["lower_objective"] = expr_json(m.lower_objective, vars);
    mp["complementarity"] = ordered_json::array();
    for (const ComplementarityPair& p : m.complementarity_pairs)
      mp["complementarity"].push_back({{"multiplier", vars[p.multiplier].name}, {"constraint", cs[p.constraint].name}});
    doc["mpec"] = std::move(mp);
  }
  return doc.dump(2) + "\n";
}

}  // namespace bileveler
