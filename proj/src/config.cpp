#include "shearlab/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace shearlab {

namespace {

using Json = nlohmann::ordered_json;

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it) seen_.insert(it.key());
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config: " + (path_.empty() ? std::string("<root>") : path_) + ": " + msg);
  }

  std::string key_path(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const Json* get(const std::string& k) {
    seen_.erase(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& k, double& out) {
    if (const Json* v = get(k)) out = as_number(*v, key_path(k));
  }

  template <class Int>
  void integer(const std::string& k, Int& out) {
    if (const Json* v = get(k)) {
      if (!v->is_number_integer()) throw ConfigError("config: " + key_path(k) + ": expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned() || v->get<std::int64_t>() >= 0)
          out = v->get<Int>();
        else
          throw ConfigError("config: " + key_path(k) + ": expected a non-negative integer");
      } else {
        out = v->get<Int>();
      }
    }
  }

  void boolean(const std::string& k, bool& out) {
    if (const Json* v = get(k)) {
      if (!v->is_boolean()) throw ConfigError("config: " + key_path(k) + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& k, std::string& out) {
    if (const Json* v = get(k)) {
      if (!v->is_string()) throw ConfigError("config: " + key_path(k) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void expression(const std::string& k, Expression& out) {
    if (const Json* v = get(k)) out = as_expression(*v, key_path(k));
  }

  void expression_pair(const std::string& k, std::array<Expression, 2>& out) {
    if (const Json* v = get(k)) {
      if (!v->is_array() || v->size() != 2)
        throw ConfigError("config: " + key_path(k) + ": expected two expressions");
      for (int i = 0; i < 2; ++i) out[i] = as_expression((*v)[i], key_path(k));
    }
  }

  template <class T>
  void list(const std::string& k, std::vector<T>& out) {
    if (const Json* v = get(k)) {
      if (!v->is_array()) throw ConfigError("config: " + key_path(k) + ": expected an array");
      out.clear();
      for (const auto& e : *v) {
        if constexpr (std::is_integral_v<T>) {
          if (!e.is_number_integer())
            throw ConfigError("config: " + key_path(k) + ": expected integers");
          out.push_back(e.get<T>());
        } else {
          out.push_back(as_number(e, key_path(k)));
        }
      }
    }
  }

  /// Nested section; `fn` receives a Reader for it.
  template <class Fn>
  void section(const std::string& k, Fn&& fn) {
    if (const Json* v = get(k)) {
      Reader r(*v, key_path(k));
      fn(r);
      r.finish();
    }
  }

  void finish() const {
    if (!seen_.empty()) fail("unknown key '" + *seen_.begin() + "'");
  }

 private:
  static double as_number(const Json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf") return std::numeric_limits<double>::infinity();
    }
    throw ConfigError("config: " + where + ": expected a number");
  }

  static Expression as_expression(const Json& v, const std::string& where) {
    if (v.is_number()) {
      std::ostringstream os;
      os.precision(17);
      os << v.get<double>();
      return Expression::parse(os.str());
    }
    if (!v.is_string()) throw ConfigError("config: " + where + ": expected an expression string");
    try {
      return Expression::parse(v.get<std::string>());
    } catch (const ExpressionError& e) {
      throw ConfigError("config: " + where + ": " + e.what());
    }
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json number(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json pair(const std::array<Expression, 2>& e) { return Json::array({e[0].source(), e[1].source()}); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

bool increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  auto same_model = [](const PDeltaModel& a, const PDeltaModel& b) {
    return a.p == b.p && a.delta == b.delta && a.mu0 == b.mu0 && a.mu == b.mu;
  };
  auto same_domain = [](const RectDomain& a, const RectDomain& b) {
    return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1 && a.dim == b.dim;
  };
  return same_model(model, o.model) && same_domain(domain, o.domain) && mesh == o.mesh &&
         data == o.data && solver == o.solver && constants == o.constants &&
         sweep_lambdas == o.sweep_lambdas && counterexample == o.counterexample &&
         manufactured == o.manufactured && lemmas == o.lemmas && seed == o.seed &&
         output == o.output;
}

void RunConfig::validate() const {
  try {
    model.validate();
    domain.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  require(mesh.nx >= 2 && mesh.ny >= 2 && mesh.nx % 2 == 0 && mesh.ny % 2 == 0,
          "mesh.nx and mesh.ny must be even and >= 2");
  require(mesh.quad_points >= 2 && mesh.quad_points <= 10, "mesh.quad_points must lie in [2, 10]");
  require(solver.q == 0.0 || solver.q > 2.0, "solver.q must be 0 (default) or > 2");
  require(solver.n_schedule.empty() || increasing(solver.n_schedule),
          "solver.n_schedule must be strictly increasing");
  for (double n : solver.n_schedule) require(n > 0.0, "solver.n_schedule entries must be positive");
  require(solver.picard_tol > 0.0 && solver.linear_tol > 0.0 && solver.weight_floor >= 0.0,
          "solver tolerances must be positive");
  require(solver.picard_max >= 1, "solver.picard_max must be >= 1");
  require(solver.bound_slack >= 0.0, "solver.bound_slack must be >= 0");
  require(constants.samples >= 10000, "constants.samples must be >= 10000");
  require(constants.ascent_iters >= 1 && constants.ascent_starts >= 1,
          "constants.ascent_iters and constants.ascent_starts must be >= 1");
  require(constants.probe_trials >= 0, "constants.probe_trials must be >= 0");
  for (double l : sweep_lambdas) require(l >= 0.0, "sweep_lambdas must be >= 0");
  require(counterexample.q > counterexample.p, "counterexample.q must exceed counterexample.p");
  require(!manufactured.enabled || manufactured.meshes.size() >= 2,
          "manufactured.meshes needs at least two meshes");
  for (int m : manufactured.meshes)
    require(m >= 2 && m % 2 == 0, "manufactured.meshes entries must be even and >= 2");
  require(lemmas.pairs >= 10000, "lemmas.pairs must be >= 10000");
  require(lemmas.young_points >= 2 && lemmas.test_fields >= 1,
          "lemmas.young_points >= 2 and lemmas.test_fields >= 1");
  require(lemmas.mesh >= 2 && lemmas.mesh % 2 == 0, "lemmas.mesh must be even and >= 2");
  for (double p : lemmas.p_values) require(p > 1.0 && p <= 2.0, "lemmas.p_values must lie in (1, 2]");
  for (double d : lemmas.delta_values) require(d >= 0.0, "lemmas.delta_values must be >= 0");
  require(!output.empty(), "output must not be empty");
}

RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig c;
  try {
    Reader r(j, "");
    r.section("model", [&](Reader& s) {
      s.number("p", c.model.p);
      s.number("delta", c.model.delta);
      s.number("mu0", c.model.mu0);
      s.number("mu", c.model.mu);
    });
    r.section("domain", [&](Reader& s) {
      s.number("x0", c.domain.x0);
      s.number("y0", c.domain.y0);
      s.number("x1", c.domain.x1);
      s.number("y1", c.domain.y1);
    });
    r.section("mesh", [&](Reader& s) {
      s.integer("nx", c.mesh.nx);
      s.integer("ny", c.mesh.ny);
      s.integer("quad_points", c.mesh.quad_points);
    });
    r.section("data", [&](Reader& s) {
      s.expression("g1", c.data.g1);
      s.expression_pair("g2", c.data.g2);
      s.expression_pair("f", c.data.f);
      s.list("g2_nodal", c.data.g2_nodal);
    });
    r.section("solver", [&](Reader& s) {
      s.number("q", c.solver.q);
      s.list("n_schedule", c.solver.n_schedule);
      s.number("picard_tol", c.solver.picard_tol);
      s.integer("picard_max", c.solver.picard_max);
      s.number("linear_tol", c.solver.linear_tol);
      s.number("weight_floor", c.solver.weight_floor);
      s.number("bound_slack", c.solver.bound_slack);
      s.boolean("override_certification", c.solver.override_certification);
    });
    r.section("constants", [&](Reader& s) {
      s.integer("samples", c.constants.samples);
      s.integer("ascent_iters", c.constants.ascent_iters);
      s.integer("ascent_starts", c.constants.ascent_starts);
      s.integer("probe_trials", c.constants.probe_trials);
    });
    r.section("sweep", [&](Reader& s) { s.list("lambdas", c.sweep_lambdas); });
    r.section("counterexample", [&](Reader& s) {
      auto& x = c.counterexample;
      s.number("p", x.p);
      s.number("q", x.q);
      s.number("radius", x.radius);
      s.number("f1", x.f1);
      s.number("g1", x.g1);
      s.number("c2", x.c2);
      s.number("c1", x.c1);
      s.integer("levels", x.levels);
      s.list("n_values", x.n_values);
    });
    r.section("manufactured", [&](Reader& s) {
      auto& m = c.manufactured;
      s.boolean("enabled", m.enabled);
      s.expression_pair("velocity", m.velocity);
      s.expression("pressure", m.pressure);
      s.list("meshes", m.meshes);
      s.boolean("convection", m.convection);
    });
    r.section("lemmas", [&](Reader& s) {
      auto& l = c.lemmas;
      s.integer("pairs", l.pairs);
      s.integer("young_points", l.young_points);
      s.integer("test_fields", l.test_fields);
      s.integer("mesh", l.mesh);
      s.list("p_values", l.p_values);
      s.list("delta_values", l.delta_values);
    });
    r.integer("seed", c.seed);
    r.string("output", c.output);
    r.finish();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::string serialize_config(const RunConfig& c) {
  Json j;
  j["model"] = {{"p", c.model.p}, {"delta", c.model.delta}, {"mu0", c.model.mu0}, {"mu", c.model.mu}};
  j["domain"] = {{"x0", c.domain.x0}, {"y0", c.domain.y0}, {"x1", c.domain.x1}, {"y1", c.domain.y1}};
  j["mesh"] = {{"nx", c.mesh.nx}, {"ny", c.mesh.ny}, {"quad_points", c.mesh.quad_points}};
  j["data"] = {{"g1", c.data.g1.source()},
               {"g2", pair(c.data.g2)},
               {"f", pair(c.data.f)},
               {"g2_nodal", c.data.g2_nodal}};
  j["solver"] = {{"q", c.solver.q},
                 {"n_schedule", numbers(c.solver.n_schedule)},
                 {"picard_tol", c.solver.picard_tol},
                 {"picard_max", c.solver.picard_max},
                 {"linear_tol", c.solver.linear_tol},
                 {"weight_floor", c.solver.weight_floor},
                 {"bound_slack", c.solver.bound_slack},
                 {"override_certification", c.solver.override_certification}};
  j["constants"] = {{"samples", c.constants.samples},
                    {"ascent_iters", c.constants.ascent_iters},
                    {"ascent_starts", c.constants.ascent_starts},
                    {"probe_trials", c.constants.probe_trials}};
  j["sweep"] = {{"lambdas", numbers(c.sweep_lambdas)}};
  const auto& x = c.counterexample;
  j["counterexample"] = {{"p", x.p},       {"q", x.q},   {"radius", x.radius},
                         {"f1", x.f1},     {"g1", x.g1}, {"c2", x.c2},
                         {"c1", x.c1},     {"levels", x.levels},
                         {"n_values", numbers(x.n_values)}};
  const auto& m = c.manufactured;
  j["manufactured"] = {{"enabled", m.enabled},
                       {"velocity", pair(m.velocity)},
                       {"pressure", m.pressure.source()},
                       {"meshes", m.meshes},
                       {"convection", m.convection}};
  const auto& l = c.lemmas;
  j["lemmas"] = {{"pairs", l.pairs},
                 {"young_points", l.young_points},
                 {"test_fields", l.test_fields},
                 {"mesh", l.mesh},
                 {"p_values", numbers(l.p_values)},
                 {"delta_values", numbers(l.delta_values)}};
  j["seed"] = c.seed;
  j["output"] = c.output;
  return j.dump(2) + "\n";
}

}  // namespace shearlab
