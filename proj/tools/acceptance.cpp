// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Usage: shearlab_acceptance [--configs DIR] [--out DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shearlab/certifier.hpp"
#include "shearlab/config.hpp"
#include "shearlab/constitutive.hpp"
#include "shearlab/counterexample.hpp"
#include "shearlab/expression.hpp"
#include "shearlab/lifting.hpp"
#include "shearlab/pipeline.hpp"
#include "shearlab/solver.hpp"

using namespace shearlab;
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Pinned tolerances and budgets.
constexpr double kPairRelTol = 1e-10;
constexpr std::size_t kPairs = 100000;
constexpr double kYoungBudget = 5.0, kPairBudget = 30.0;
constexpr double kLiftDivTol = 1e-8, kLiftBudget = 60.0;
constexpr double kExactFloor = 1e-12;  // reproduction error treated as exact
constexpr double kRadiusTol = 1e-10, kCertBudget = 10.0;
constexpr std::size_t kRadiusInstances = 1000;
constexpr double kThetaTol = 1e-3;
constexpr double kEnergySlack = 1.05, kSolveBudget = 300.0;
constexpr double kPenaltySlack = 1.05;
constexpr double kMinOrder = 1.5;
constexpr double kDefectFactor = 2.0;
constexpr double kDefectFloor = 1e-15;  // e3 is exact for P2 fields at this quadrature
constexpr double kCounterBudget = 120.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig config_at(const fs::path& file, const fs::path& out) {
  RunConfig c = load_config(file.string());
  c.output = out.string();
  return c;
}

Outcome c1_inequalities() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t checked = 0, violations = 0;
  std::uint64_t seed = 100;
  for (double p : {1.2, 1.5, 1.8})
    for (double d : {0.0, 0.1, 1.0}) {
      const PDeltaModel m{p, d, 0.0, 1.0};
      const Characteristics c = estimate_characteristics(m, kPairs, seed);
      for (const auto& s : verify_pair_inequalities(m, c, kPairs, seed + 1, kPairRelTol)) {
        checked += s.checked;
        violations += s.violations;
      }
      seed += 2;
    }
  const double t = seconds_since(t0);
  return {violations == 0 && t < kPairBudget,
          std::to_string(checked) + " checks over 9 models, " + std::to_string(violations) +
              " violations, " + fmt("%.1f s", t)};
}

Outcome c2_young() {
  const auto t0 = std::chrono::steady_clock::now();
  const InequalitySweep s = verify_young_grid(25);
  const double t = seconds_since(t0);
  return {s.passed() && s.checked >= 10000 && t < kYoungBudget,
          std::to_string(s.checked) + " grid points, " + std::to_string(s.violations) +
              " violations, " + fmt("%.2f s", t)};
}

// (x^2, -2xy) is a zero-force Stokes field in P2, so the lift reproduces it exactly; a
// non-polynomial control field carries the monotone-decrease requirement.
Outcome c3_lift() {
  const auto t0 = std::chrono::steady_clock::now();
  const VectorFn poly = [](double x, double y) { return std::array<double, 2>{x * x, -2 * x * y}; };
  const VectorFn smooth = [](double x, double y) {
    return std::array<double, 2>{std::exp(x) * std::sin(y), std::exp(x) * std::cos(y)};
  };
  bool ok = true;
  double worst_div = 0.0, worst_err = 0.0;
  double prev_ctrl = INFINITY, prev_bdry = INFINITY;
  std::string ctrl;
  for (int n : {8, 16, 32}) {
    const auto s = DiscreteSpace::build({}, n, n);
    BoundaryData d;
    d.g2 = poly;
    const LiftField l = lift(d, s, 1.8, 1.8);
    worst_div = std::max(worst_div, l.divergence_defect);
    const double err = std::max(error_L2(l.g, poly), l.boundary_defect);
    worst_err = std::max(worst_err, err);
    BoundaryData dc;
    dc.g2 = smooth;
    const LiftField lc = lift(dc, s, 1.8, 1.8);
    const double ec = error_L2(lc.g, smooth);
    ok = ok && lc.divergence_defect <= kLiftDivTol && ec < prev_ctrl && lc.boundary_defect < prev_bdry;
    prev_ctrl = ec;
    prev_bdry = lc.boundary_defect;
    ctrl += fmt(" %.2e", ec);
  }
  ok = ok && worst_div <= kLiftDivTol && worst_err <= kExactFloor;
  const double t = seconds_since(t0);
  return {ok && t < kLiftBudget,
          fmt("div defect %.1e, ", worst_div) + fmt("reproduction error %.1e (exact), ", worst_err) +
              "control L2 errors" + ctrl + fmt(", %.1f s", t)};
}

// The budget covers the radius check and the sweep; the sampled and ascent constants
// they consume are estimated first and timed separately.
Outcome c4_certifier(const fs::path& configs) {
  const RunConfig cfg = load_config((configs / "certified.json").string());
  const auto t_in = std::chrono::steady_clock::now();
  const auto space = DiscreteSpace::build(cfg.domain, cfg.mesh.nx, cfg.mesh.ny);
  BoundaryData data;
  const auto g2 = cfg.data.g2;
  data.g2 = [g2](double x, double y) { return std::array<double, 2>{g2[0](x, y), g2[1](x, y)}; };
  CertifierInputs base;
  base.p = cfg.model.p;
  base.s = compute_s(base.p, 2);
  base.delta = cfg.model.delta;
  base.chars = estimate_characteristics(cfg.model, cfg.constants.samples, cfg.seed);
  AscentOptions ao;
  ao.iters = cfg.constants.ascent_iters;
  ao.starts = cfg.constants.ascent_starts;
  ao.seed = cfg.seed;
  base.embeddings = estimate_embeddings(space, base.p, base.s, ao);
  base.f_norm = 0.0;
  const double t_inputs = seconds_since(t_in);
  const auto t0 = std::chrono::steady_clock::now();
  const RadiusCheck rc = verify_radius_formula(kRadiusInstances, 2024, kRadiusTol);
  const auto rows = scaling_sweep(data, space, base, cfg.sweep_lambdas);
  const int transitions = count_transitions(rows);
  const double t = seconds_since(t0);
  return {rc.passed() && rc.instances == kRadiusInstances && transitions == 1 && t < kCertBudget,
          std::to_string(rc.instances) + " instances, " + fmt("worst rel %.1e, ", rc.worst_rel) +
              std::to_string(transitions) + " transition over " + std::to_string(rows.size()) +
              " lambdas, " + fmt("%.1f s", t) + fmt(" (+%.1f s constant estimation)", t_inputs)};
}

Outcome c5_weight_probe() {
  bool ok = true;
  std::string d;
  for (double p : {1.2, 1.5, 1.8}) {
    const WeightProbe w = weight_probe(1.0, 0.5, p, 1e-3);
    ok = ok && std::abs(w.theta_best - (p - 1.0)) <= kThetaTol + 1e-12;
    d += fmt(" p=%.1f:", p) + fmt("theta*=%.3f", w.theta_best);
  }
  return {ok, "argmax" + d};
}

// Criteria 6 and 7 share one continuation run.
std::pair<Outcome, Outcome> c6_c7_solve(const fs::path& configs, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const CommandResult r = cmd_solve(config_at(configs / "certified.json", out / "c6"));
  const double t = seconds_since(t0);
  const Json j = read_json(out / "c6" / "solve.json");
  if (j.value("refused", true) || !j["levels"].is_array())
    return {{false, "solve refused or failed: " + r.message}, {false, "no levels"}};
  const double R = j["R"].get<double>();
  bool e_ok = true, p_ok = true;
  double worst_e = 0.0, worst_p = 0.0;
  for (const auto& L : j["levels"]) {
    const double ratio = L["norm_Du_p"].get<double>() / R;
    const double pr = L["penalty_norm"].get<double>() / L["penalty_envelope"].get<double>();
    worst_e = std::max(worst_e, ratio);
    worst_p = std::max(worst_p, pr);
    e_ok = e_ok && L["converged"].get<bool>() && ratio <= kEnergySlack;
    p_ok = p_ok && pr <= kPenaltySlack;
  }
  const std::size_t levels = j["levels"].size();
  return {{e_ok && levels == 7 && t < kSolveBudget,
           std::to_string(levels) + fmt(" levels, R=%.4f, ", R) +
               fmt("max ||Du||_p / R = %.4f, ", worst_e) + fmt("%.1f s", t)},
          {p_ok && levels == 7, fmt("max penalty / envelope = %.4f", worst_p)}};
}

Outcome c8_manufactured(const fs::path& configs, const fs::path& out) {
  bool ok = true;
  std::string d;
  for (double p : {1.8, 2.0}) {
    RunConfig c = config_at(configs / "manufactured.json", out / ("c8_" + fmt("%.1f", p)));
    c.model.p = p;
    const CommandResult r = cmd_solve(c);
    const Json j = read_json(fs::path(c.output) / "solve.json");
    const auto& rows = j["rows"];
    bool dec = rows.size() >= 4;
    for (std::size_t k = 1; k < rows.size(); ++k)
      dec = dec && rows[k]["velocity_l2"].get<double>() < rows[k - 1]["velocity_l2"].get<double>();
    const double order = rows.back()["order"].get<double>();
    ok = ok && r.exit_code == kExitOk && dec && order >= kMinOrder;
    d += fmt(" p=%.1f:", p) + fmt("order %.2f", order) + (dec ? "" : " (not decreasing)");
  }
  return {ok, "3 refinements," + d};
}

Outcome c9_convective() {
  const Expression psi = Expression::parse("(x*(1-x)*y*(1-y))^2*exp(x+2*y)");
  std::vector<ConvectiveDefects> d;
  for (int n : {8, 16, 32, 64}) {
    SpaceOptions o;
    o.check_inf_sup = false;
    const auto s = DiscreteSpace::build({}, n, n, o);
    const Field u = interpolate_velocity(s, [&](double x, double y) {
      const Dual v = psi.dual(x, y);
      return std::array<double, 2>{v.dy, -v.dx};
    });
    const Field g = interpolate_velocity(s, [](double x, double y) {
      return std::array<double, 2>{std::exp(x) * std::sin(y), std::exp(x) * std::cos(y)};
    });
    d.push_back(convective_identity_diagnostics(*s, eval_velocity_qp(u), eval_velocity_qp(g)));
  }
  bool ok = true;
  double f1 = INFINITY, f2 = INFINITY, f4 = INFINITY, e3 = 0.0;
  for (std::size_t k = 1; k < d.size(); ++k) {
    f1 = std::min(f1, d[k - 1].e1 / d[k].e1);
    f2 = std::min(f2, d[k - 1].e2 / d[k].e2);
    f4 = std::min(f4, d[k - 1].e4 / d[k].e4);
    e3 = std::max({e3, d[k].e3, d[k - 1].e3});
  }
  ok = f1 >= kDefectFactor && f2 >= kDefectFactor && f4 >= kDefectFactor && e3 <= kDefectFloor;
  return {ok, fmt("min factor e1 %.2f, ", f1) + fmt("e2 %.2f, ", f2) + fmt("e4 %.2f, ", f4) +
                  fmt("e3 <= %.1e (exact)", e3)};
}

Outcome c10_counterexample() {
  const auto t0 = std::chrono::steady_clock::now();
  const CounterexampleRun run = run_counterexample(CounterexampleParams{});
  const double t = seconds_since(t0);
  bool tail = run.n0.has_value();
  for (const auto& r : run.rows)
    if (run.n0 && r.n >= *run.n0) tail = tail && r.P_n < 0.0;
  return {tail && run.margin_increasing && t < kCounterBudget,
          (run.n0 ? fmt("N0 = %g, ", *run.n0) : std::string("no N0, ")) +
              (run.margin_increasing ? "margin increasing, " : "margin not increasing, ") +
              fmt("%.1f s", t)};
}

Outcome c11_determinism(const fs::path& out) {
  RunConfig base = parse_config(R"j({
    "mesh": {"nx": 8, "ny": 8},
    "data": {"g2": ["0.1*sin(pi*x)*cos(pi*y)", "-0.1*cos(pi*x)*sin(pi*y)"]},
    "solver": {"n_schedule": [10, 40]},
    "sweep": {"lambdas": [0.5, 1, 4, 16]},
    "counterexample": {"n_values": [1, 8, 64, 512]},
    "seed": 7
  })j");
  std::size_t files = 0, diffs = 0;
  for (const std::string cmd : {"check-tensor", "certify", "solve", "counterexample"}) {
    std::vector<std::string> a, b;
    for (int rep = 0; rep < 2; ++rep) {
      RunConfig c = base;
      c.output = (out / ("c11_" + std::to_string(rep)) / cmd).string();
      fs::remove_all(c.output);
      (rep ? b : a) = run_command(cmd, c).files;
    }
    if (a.size() != b.size()) ++diffs;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      const std::string ext = fs::path(a[i]).extension().string();
      if (ext != ".json" && ext != ".csv") continue;
      ++files;
      if (slurp(a[i]) != slurp(b[i])) ++diffs;
    }
  }
  return {diffs == 0 && files > 0,
          std::to_string(files) + " JSON/CSV reports compared, " + std::to_string(diffs) +
              " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path configs = SHEARLAB_DEFAULT_CONFIGS;
  fs::path out = "acceptance_out";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string a = argv[i];
    if (a == "--configs") configs = argv[i + 1];
    else if (a == "--out") out = argv[i + 1];
    else {
      std::fprintf(stderr, "usage: %s [--configs DIR] [--out DIR]\n", argv[0]);
      return 4;
    }
  }
  fs::create_directories(out);
  std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"inequality suite", c1_inequalities},
      {"Young grid", c2_young},
      {"lifting", c3_lift},
      {"certifier arithmetic", [&] { return c4_certifier(configs); }},
      {"weight probe", c5_weight_probe},
  };
  int failed = 0;
  int k = 0;
  auto report = [&](const std::string& name, const Outcome& o) {
    std::printf("[%s] %2d %-22s %s\n", o.pass ? "PASS" : "FAIL", ++k, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };
  for (const auto& [name, f] : checks) report(name, guarded(f));
  std::pair<Outcome, Outcome> s;
  try {
    s = c6_c7_solve(configs, out);
  } catch (const std::exception& e) {
    s = {{false, std::string("exception: ") + e.what()}, {false, "not run"}};
  }
  report("solver energy bound", s.first);
  report("penalty decay", s.second);
  report("manufactured solution", guarded([&] { return c8_manufactured(configs, out); }));
  report("convective identities", guarded(c9_convective));
  report("counterexample", guarded(c10_counterexample));
  report("determinism", guarded([&] { return c11_determinism(out); }));
  std::printf("%d/%d criteria passed\n", k - failed, k);
  return failed == 0 ? 0 : 1;
}
