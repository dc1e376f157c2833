#include "shearlab/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shearlab/certifier.hpp"
#include "shearlab/counterexample.hpp"
#include "shearlab/embedding.hpp"
#include "shearlab/lifting.hpp"
#include "shearlab/solver.hpp"

namespace shearlab {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class Output {
 public:
  explicit Output(const RunConfig& cfg, CommandResult& res) : dir_(cfg.output), res_(res) {
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void text(const std::string& name, const std::string& body) {
    std::ofstream out(path(name), std::ios::binary);
    out << body;
    if (!out) throw std::runtime_error("cannot write " + path(name));
    res_.files.push_back(path(name));
  }

  void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }

  void field(const std::string& name, const Field& f) {
    write_field(f, path(name), name);
    res_.files.push_back(path(name));
  }

 private:
  fs::path dir_;
  CommandResult& res_;
};

Json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Json symmat(const SymMat& m) {
  Json a = Json::array();
  for (int i = 0; i < m.dim(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

Json witness(const PairWitness& w) {
  return {{"A", symmat(w.a)}, {"B", symmat(w.b)}, {"ratio", w.ratio}};
}

Json model_json(const PDeltaModel& m) {
  return {{"p", m.p}, {"delta", m.delta}, {"mu0", m.mu0}, {"mu", m.mu}};
}

Json chars_json(const Characteristics& c) {
  return {{"C1", c.c1},
          {"C2", c.c2},
          {"C3", c.c3},
          {"witnesses", {{"C1", witness(c.c1_witness)}, {"C2", witness(c.c2_witness)},
                         {"C3", witness(c.c3_witness)}}},
          {"samples", c.samples},
          {"seed", c.seed},
          {"rigorous", c.rigorous}};
}

Json sweep_json(const InequalitySweep& s) {
  return {{"name", s.name},
          {"checked", s.checked},
          {"violations", s.violations},
          {"worst_relative_slack", num(s.worst)},
          {"passed", s.passed()}};
}

Json lemma_json(const LemmaCheck& s) {
  return {{"name", s.name},
          {"checked", s.checked},
          {"violations", s.violations},
          {"worst_relative_slack", num(s.worst)},
          {"max_skew_defect", s.max_skew},
          {"passed", s.passed()}};
}

Json norms_json(const LiftNorms& n) {
  return {{"w1p", n.w1p},       {"w1s", n.w1s},           {"sym_s", n.sym_s},
          {"div_s", n.div_s},   {"shifted_p", n.shifted_p}, {"g1_p", n.g1_p},
          {"boundary_p", n.boundary_p}};
}

Json embeddings_json(const EmbeddingConstants& e) {
  return {{"p", e.p},
          {"s", e.s},
          {"c_korn", e.c_korn()},
          {"c_sob", e.c_sob()},
          {"sob_p_target", num(e.sob_p_target)},
          {"c_A", e.sob_p_to_pstar},
          {"c_B", e.sob_s_to_2pprime},
          {"c_C", e.sob_s_to_2sprime},
          {"raw", {{"korn", e.korn_raw}, {"c_A", e.sob_a_raw}, {"c_B", e.sob_b_raw},
                   {"c_C", e.sob_c_raw}}},
          {"converged", e.converged},
          {"rigorous", e.rigorous}};
}

SpacePtr build_space(const RunConfig& cfg, int nx, int ny) {
  SpaceOptions o;
  o.quad_points = cfg.mesh.quad_points;
  return DiscreteSpace::build(cfg.domain, nx, ny, o);
}

SpacePtr build_space(const RunConfig& cfg) { return build_space(cfg, cfg.mesh.nx, cfg.mesh.ny); }

BoundaryData boundary_data(const RunConfig& cfg, const DiscreteSpace& space) {
  BoundaryData d;
  const Expression g1 = cfg.data.g1;
  const auto g2 = cfg.data.g2;
  d.g1 = [g1](double x, double y) { return g1(x, y); };
  d.g2 = [g2](double x, double y) { return std::array<double, 2>{g2[0](x, y), g2[1](x, y)}; };
  if (!cfg.data.g2_nodal.empty()) {
    if (static_cast<int>(cfg.data.g2_nodal.size()) != space.num_velocity())
      throw ConfigError("config: data.g2_nodal needs " + std::to_string(space.num_velocity()) +
                        " values on this mesh, got " + std::to_string(cfg.data.g2_nodal.size()));
    d.g2_nodal = Eigen::Map<const Eigen::VectorXd>(cfg.data.g2_nodal.data(),
                                                   static_cast<Eigen::Index>(cfg.data.g2_nodal.size()));
  }
  return d;
}

bool is_zero(const Expression& e) { return e.source() == "0" || e.source() == Expression().source(); }

AscentOptions ascent(const RunConfig& cfg) {
  AscentOptions o;
  o.iters = cfg.constants.ascent_iters;
  o.starts = cfg.constants.ascent_starts;
  o.seed = cfg.seed;
  return o;
}

struct Certification {
  SpacePtr space;
  BoundaryData data;
  double s = 0.0;
  Characteristics chars;
  EmbeddingConstants emb;
  LiftField lift;
  Eigen::VectorXd load;
  double f_norm = 0.0;
  CoercivityReport report;
};

Certification certify(const RunConfig& cfg) {
  Certification c;
  c.space = build_space(cfg);
  c.data = boundary_data(cfg, *c.space);
  const double p = cfg.model.p;
  if (!(p < 2.0)) throw ConfigError("config: certification needs p < 2 (the smallness condition is stated for p in (1, 2))");
  c.s = compute_s(p, 2);
  c.lift = lift(c.data, c.space, p, c.s, cfg.model.delta);
  c.chars = estimate_characteristics(cfg.model, cfg.constants.samples, cfg.seed);
  c.emb = estimate_embeddings(c.space, p, c.s, ascent(cfg));
  const auto f = cfg.data.f;
  c.load = load_vector(*c.space,
                       [f](double x, double y) { return std::array<double, 2>{f[0](x, y), f[1](x, y)}; });
  c.f_norm = (is_zero(f[0]) && is_zero(f[1])) ? 0.0 : dual_norm(c.space, c.load, p, ascent(cfg)).value;
  CertifierInputs in;
  in.chars = c.chars;
  in.embeddings = c.emb;
  in.lift = c.lift.norms;
  in.f_norm = c.f_norm;
  in.p = p;
  in.s = c.s;
  in.delta = cfg.model.delta;
  c.report = check_smallness(compute_constants(in), p);
  c.report.s = c.s;
  c.report.d = 2;
  c.report.s_branch_consistent = std::abs(compute_s_branch(p, 2) - c.s) <= 1e-14 * c.s;
  Provenance pv;
  pv.c1 = c.chars.c1;
  pv.c2 = c.chars.c2;
  pv.c3 = c.chars.c3;
  pv.c_sob = c.emb.c_sob();
  pv.c_korn = c.emb.c_korn();
  pv.korn_raw = c.emb.korn_raw;
  pv.sob_a_raw = c.emb.sob_a_raw;
  pv.sob_b_raw = c.emb.sob_b_raw;
  pv.sob_c_raw = c.emb.sob_c_raw;
  pv.embeddings_converged = c.emb.converged;
  pv.lift = c.lift.norms;
  pv.f_norm = c.f_norm;
  pv.compatibility_defect = c.lift.compatibility_defect;
  pv.divergence_defect = c.lift.divergence_defect;
  c.report.provenance = pv;
  return c;
}

Json report_json(const CoercivityReport& r) {
  Json j = {{"label", r.label},
            {"p", r.p},
            {"s", r.s},
            {"d", r.d},
            {"G1", r.g1},
            {"G2", r.g2},
            {"G3", r.g3},
            {"lhs", r.lhs},
            {"rhs", r.rhs},
            {"satisfied", r.satisfied},
            {"R", r.radius ? num(*r.radius) : Json(nullptr)},
            {"s_branch_consistent", r.s_branch_consistent}};
  if (r.provenance) {
    const auto& p = *r.provenance;
    j["provenance"] = {{"C1", p.c1},
                       {"C2", p.c2},
                       {"C3", p.c3},
                       {"c_sob", p.c_sob},
                       {"c_korn", p.c_korn},
                       {"raw", {{"korn", p.korn_raw}, {"c_A", p.sob_a_raw}, {"c_B", p.sob_b_raw},
                                {"c_C", p.sob_c_raw}}},
                       {"embeddings_converged", p.embeddings_converged},
                       {"lift_norms", norms_json(p.lift)},
                       {"f_norm", p.f_norm},
                       {"compatibility_defect", p.compatibility_defect},
                       {"divergence_defect", p.divergence_defect}};
  }
  return j;
}

Json lift_json(const LiftField& l) {
  return {{"p", l.p},
          {"s", l.s},
          {"delta", l.delta},
          {"compatibility_defect", l.compatibility_defect},
          {"divergence_defect", l.divergence_defect},
          {"boundary_defect", l.boundary_defect},
          {"norms", norms_json(l.norms)}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string history_csv(const std::vector<LevelRecord>& levels) {
  std::ostringstream os;
  os << "n,iters,residual,penalty_norm,norm_Du_p,norm_Du_q,y_norm,successive_diff,"
        "penalty_envelope,converged,energy_ok,penalty_ok\n";
  char buf[512];
  for (const auto& l : levels) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d\n",
                  l.n, l.iterations, l.residual, l.penalty_norm, l.norm_Du_p, l.norm_Du_q,
                  l.y_norm, l.successive_diff, l.penalty_envelope, l.converged ? 1 : 0,
                  l.energy_ok ? 1 : 0, l.penalty_ok ? 1 : 0);
    os << buf;
  }
  return os.str();
}

Json level_json(const LevelRecord& l) {
  Json h = Json::array();
  for (double r : l.residual_history) h.push_back(num(r));
  return {{"n", num(l.n)},
          {"iterations", l.iterations},
          {"residual", num(l.residual)},
          {"residual_history", h},
          {"penalty_norm", num(l.penalty_norm)},
          {"norm_Du_p", num(l.norm_Du_p)},
          {"norm_Du_q", num(l.norm_Du_q)},
          {"y_norm", num(l.y_norm)},
          {"successive_diff", num(l.successive_diff)},
          {"penalty_envelope", num(l.penalty_envelope)},
          {"converged", l.converged},
          {"energy_ok", l.energy_ok},
          {"penalty_ok", l.penalty_ok}};
}

SolverConfig solver_config(const RunConfig& cfg) {
  SolverConfig s;
  s.q = cfg.solver.q;
  s.n_schedule = cfg.solver.n_schedule;
  s.picard_tol = cfg.solver.picard_tol;
  s.picard_max = cfg.solver.picard_max;
  s.linear_tol = cfg.solver.linear_tol;
  s.weight_floor = cfg.solver.weight_floor;
  s.bound_slack = cfg.solver.bound_slack;
  s.override_certification = cfg.solver.override_certification;
  return s;
}

Json defects_json(const ConvectiveDefects& d) {
  return {{"e1", d.e1}, {"e2", d.e2}, {"e3", d.e3}, {"e4", d.e4},
          {"t_direct", d.t_direct}, {"t_regrouped", d.t_regrouped}};
}

CommandResult solve_manufactured(const RunConfig& cfg) {
  CommandResult res;
  Output out(cfg, res);
  const auto& m = cfg.manufactured;
  const Expression v0 = m.velocity[0], v1 = m.velocity[1], pe = m.pressure;
  const VectorFn exact = [v0, v1](double x, double y) {
    return std::array<double, 2>{v0(x, y), v1(x, y)};
  };
  const ScalarFn exact_p = [pe](double x, double y) { return pe(x, y); };
  std::ostringstream csv;
  csv << "mesh,h,velocity_l2,order,pressure_l2,iterations,residual,converged\n";
  Json rows = Json::array();
  double prev_err = 0.0, prev_h = 0.0;
  bool decreasing = true, all_converged = true;
  for (std::size_t k = 0; k < m.meshes.size(); ++k) {
    const SpacePtr space = build_space(cfg, m.meshes[k], m.meshes[k]);
    BoundaryData bd;
    bd.g2 = exact;
    bd.g1 = [v0, v1](double x, double y) { return v0.dual(x, y).dx + v1.dual(x, y).dy; };
    const double s = cfg.model.p < 2.0 ? compute_s(cfg.model.p, 2) : 2.0;
    const LiftField l = lift(bd, space, cfg.model.p, s, cfg.model.delta);
    ProblemInstance inst = ProblemInstance::make(
        cfg.model, l, manufactured_load(*space, cfg.model, v0, v1, pe, m.convection));
    inst.convection = m.convection;
    const SolveResult r = continuation_solve(inst, solver_config(cfg));
    if (r.aborted) {
      out.text("convergence.csv", csv.str());
      res.exit_code = kExitNumericalFailure;
      res.message = "manufactured solve aborted on mesh " + std::to_string(m.meshes[k]) + ": " + r.message;
      return res;
    }
    Field pi = r.pi;
    const double err = error_L2(r.v, exact);
    const double perr = error_L2(pi, exact_p);
    const double h = space->h();
    const double order = k > 0 ? std::log(prev_err / err) / std::log(prev_h / h) : NAN;
    if (k > 0 && !(err < prev_err)) decreasing = false;
    all_converged = all_converged && r.converged;
    const LevelRecord& last = r.levels.back();
    char buf[512];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%d\n", m.meshes[k], h, err,
                  order, perr, last.iterations, last.residual, r.converged ? 1 : 0);
    csv << buf;
    rows.push_back({{"mesh", m.meshes[k]},
                    {"h", h},
                    {"velocity_l2", err},
                    {"order", num(order)},
                    {"pressure_l2", perr},
                    {"iterations", last.iterations},
                    {"residual", num(last.residual)},
                    {"converged", r.converged}});
    prev_err = err;
    prev_h = h;
  }
  out.text("convergence.csv", csv.str());
  Json j = {{"mode", "manufactured"},
            {"model", model_json(cfg.model)},
            {"velocity", {v0.source(), v1.source()}},
            {"pressure", pe.source()},
            {"convection", m.convection},
            {"rows", rows},
            {"error_decreasing", decreasing},
            {"converged", all_converged}};
  out.json("solve.json", j);
  if (!all_converged) {
    res.exit_code = kExitNumericalFailure;
    res.message = "Picard iteration did not reach the tolerance on every mesh";
  } else if (!decreasing) {
    res.exit_code = kExitConditionFails;
    res.message = "velocity error not decreasing under refinement";
  } else {
    res.message = "manufactured convergence: " + fmt("final error %.3e", prev_err);
  }
  return res;
}

}  // namespace

CommandResult cmd_check_tensor(const RunConfig& cfg) {
  CommandResult res;
  Output out(cfg, res);
  const Characteristics c = estimate_characteristics(cfg.model, cfg.constants.samples, cfg.seed);
  std::vector<InequalitySweep> sweeps =
      verify_pair_inequalities(cfg.model, c, cfg.constants.samples, cfg.seed + 1);
  sweeps.push_back(verify_rho_monotone(cfg.model, c, 2000, cfg.seed + 2));
  sweeps.push_back(verify_shift_consistency(cfg.model, 10000, cfg.seed + 3));
  sweeps.push_back(verify_stress_bound(cfg.model, c, 200, 64, cfg.seed + 4));
  bool ok = true;
  Json sj = Json::array();
  for (const auto& s : sweeps) {
    ok = ok && s.passed();
    sj.push_back(sweep_json(s));
  }
  out.json("check_tensor.json", {{"model", model_json(cfg.model)},
                                 {"characteristics", chars_json(c)},
                                 {"sweeps", sj},
                                 {"passed", ok}});
  res.exit_code = ok ? kExitOk : kExitConditionFails;
  res.message = ok ? "all inequality sweeps passed" : "inequality violation found";
  return res;
}

CommandResult cmd_lift(const RunConfig& cfg) {
  CommandResult res;
  Output out(cfg, res);
  const SpacePtr space = build_space(cfg);
  const BoundaryData data = boundary_data(cfg, *space);
  const double p = cfg.model.p;
  const double s = p < 2.0 ? compute_s(p, 2) : 2.0;
  const LiftField l = lift(data, space, p, s, cfg.model.delta);
  Json j = {{"mesh", {cfg.mesh.nx, cfg.mesh.ny}}, {"lift", lift_json(l)}};
  if (cfg.constants.probe_trials > 0) {
    const OperatorNormProbe probe = operator_norm_probe(space, cfg.constants.probe_trials, p, cfg.seed);
    j["probe"] = {{"trials", probe.trials.size()},
                  {"c_lift_est", probe.c_lift_est},
                  {"c_bog_est", probe.c_bog_est},
                  {"c_bog_g1_only", probe.c_bog_g1_only}};
    // bound shape ||g||_{1,p} <= c_lift (1 + c_bog) N_b + c_bog ||g1||_p on every trial
    std::size_t violations = 0;
    for (const auto& t : probe.trials) {
      const double bound = probe.c_lift_est * (1.0 + probe.c_bog_est) * t.boundary_norm +
                           probe.c_bog_est * t.g1_norm;
      if (t.g_norm > bound * (1.0 + 1e-10)) ++violations;
    }
    j["probe"]["bound_violations"] = violations;
  }
  out.json("lift.json", j);
  out.field("lift_g.txt", l.g);
  out.field("lift_g_hat.txt", l.g_hat);
  out.field("lift_w.txt", l.w);
  res.message = "lift computed, divergence defect " + fmt("%.3e", l.divergence_defect);
  return res;
}

CommandResult cmd_certify(const RunConfig& cfg) {
  CommandResult res;
  Output out(cfg, res);
  const Certification c = certify(cfg);
  Json j = {{"report", report_json(c.report)},
            {"characteristics", chars_json(c.chars)},
            {"embeddings", embeddings_json(c.emb)},
            {"lift", lift_json(c.lift)}};
  if (!cfg.sweep_lambdas.empty()) {
    CertifierInputs base;
    base.chars = c.chars;
    base.embeddings = c.emb;
    base.f_norm = c.f_norm;
    base.p = cfg.model.p;
    base.s = c.s;
    base.delta = cfg.model.delta;
    const auto rows = scaling_sweep(c.data, c.space, base, cfg.sweep_lambdas);
    out.text("sweep.csv", sweep_csv(rows));
    j["sweep"] = {{"lambdas", cfg.sweep_lambdas.size()}, {"transitions", count_transitions(rows)}};
  }
  out.json("certify.json", j);
  res.exit_code = c.report.satisfied ? kExitOk : kExitConditionFails;
  res.message = c.report.satisfied
                    ? "smallness condition satisfied, R = " + fmt("%.6g", *c.report.radius)
                    : "smallness condition violated: lhs " + fmt("%.6g", c.report.lhs) +
                          " < rhs " + fmt("%.6g", c.report.rhs);
  return res;
}

CommandResult cmd_solve(const RunConfig& cfg) {
  if (cfg.manufactured.enabled) return solve_manufactured(cfg);
  CommandResult res;
  Output out(cfg, res);
  const SolverConfig scfg = solver_config(cfg);
  std::optional<Certification> cert;
  std::optional<CoercivityReport> report;
  Json j = {{"mode", "data"}, {"model", model_json(cfg.model)}};
  SpacePtr space;
  LiftField l;
  Eigen::VectorXd load;
  if (cfg.model.p < 2.0) {
    cert = certify(cfg);
    report = cert->report;
    space = cert->space;
    l = cert->lift;
    load = cert->load;
    j["certification"] = report_json(cert->report);
  } else {
    // p = 2 has no smallness condition in this form; only the override path solves
    space = build_space(cfg);
    l = lift(boundary_data(cfg, *space), space, 2.0, 2.0, cfg.model.delta);
    const auto f = cfg.data.f;
    load = load_vector(*space,
                       [f](double x, double y) { return std::array<double, 2>{f[0](x, y), f[1](x, y)}; });
    j["certification"] = nullptr;
  }
  const ProblemInstance inst = ProblemInstance::make(cfg.model, l, load, report);
  SolveResult r;
  try {
    r = continuation_solve(inst, scfg);
  } catch (const CertificationRequired& e) {
    j["refused"] = true;
    j["message"] = e.what();
    out.json("solve.json", j);
    res.exit_code = kExitConditionFails;
    res.message = e.what();
    return res;
  }
  j["refused"] = false;
  j["q"] = r.q;
  j["R"] = r.radius ? num(*r.radius) : Json(nullptr);
  Json lv = Json::array();
  for (const auto& L : r.levels) lv.push_back(level_json(L));
  j["levels"] = lv;
  j["converged"] = r.converged;
  j["energy_ok"] = r.energy_ok;
  j["penalty_ok"] = r.penalty_ok;
  j["aborted"] = r.aborted;
  j["message"] = r.message;
  out.text("history.csv", history_csv(r.levels));
  if (r.aborted) {
    out.json("solve.json", j);
    res.exit_code = kExitNumericalFailure;
    res.message = "continuation aborted: " + r.message;
    return res;
  }
  const ConvectiveDefects d = convective_identity_diagnostics(inst, r.u);
  const double last_n = r.levels.empty() ? kNoPenalty : r.levels.back().n;
  const PressureRecovery pr = recover_pressure(inst, r.u, r.q, last_n);
  Json diag = {{"convective_defects", defects_json(d)},
               {"pressure_recovery_residual", num(pr.residual)},
               {"divergence_defect_lift", l.divergence_defect}};
  if (cert) {
    const double t = std::abs(apply_T(inst, r.u, r.u));
    diag["convective_term"] = t;
    diag["convective_bound"] = convective_bound(cert->emb.c_sob(), cert->emb.c_korn(), l.norms,
                                                norm_sym_grad_p(r.u, cfg.model.p));
  }
  j["diagnostics"] = diag;
  out.json("solve.json", j);
  out.field("u.txt", r.u);
  out.field("v.txt", r.v);
  out.field("pi.txt", r.pi);
  if (!r.converged) {
    res.exit_code = kExitNumericalFailure;
    res.message = r.message;
  } else if (!r.energy_ok || !r.penalty_ok) {
    res.exit_code = kExitConditionFails;
    res.message = "energy or penalty bound violated on a continuation level";
  } else {
    res.message = "solved " + std::to_string(r.levels.size()) + " continuation levels";
  }
  return res;
}

CommandResult cmd_counterexample(const RunConfig& cfg) {
  CommandResult res;
  Output out(cfg, res);
  CounterexampleParams p;
  const auto& c = cfg.counterexample;
  p.p = c.p;
  p.q = c.q;
  p.radius = c.radius;
  p.f1 = c.f1;
  p.g1 = c.g1;
  p.c2 = c.c2;
  p.c1 = c.c1;
  p.levels = c.levels;
  p.n_values = c.n_values;
  CounterexampleRun run;
  try {
    run = run_counterexample(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: counterexample: ") + e.what());
  }
  out.text("counterexample.csv", counterexample_csv(run));
  std::size_t negative = 0, step1 = 0, step2 = 0, sphere_bad = 0;
  for (const auto& r : run.rows) {
    if (run.n0 && r.n >= *run.n0) ++negative;
    if (r.branch == 1) ++step1;
    if (r.branch == 2) ++step2;
    if (std::abs(r.sphere - r.radius) > 1e-8 * r.radius) ++sphere_bad;
  }
  Json ratios = Json::array();
  for (double x : run.ratios) ratios.push_back(x);
  out.json("counterexample.json", {{"p", run.params.p},
                                   {"q", run.params.q},
                                   {"R", run.params.radius},
                                   {"F1", run.params.f1},
                                   {"G1", run.params.g1},
                                   {"c1", run.params.c1},
                                   {"c2", run.params.c2},
                                   {"levels", run.params.levels},
                                   {"ratios", ratios},
                                   {"rows", run.rows.size()},
                                   {"rows_beyond_N0", negative},
                                   {"step1_rows", step1},
                                   {"step2_rows", step2},
                                   {"sphere_violations", sphere_bad},
                                   {"N0", run.n0 ? Json(*run.n0) : Json(nullptr)},
                                   {"margin_increasing", run.margin_increasing}});
  res.exit_code = run.n0 ? kExitOk : kExitConditionFails;
  res.message = run.n0 ? "P_n < 0 for all n >= " + fmt("%.0f", *run.n0)
                       : "no negativity threshold on the n grid";
  return res;
}

CommandResult cmd_verify_lemmas(const RunConfig& cfg) {
  CommandResult res;
  Output out(cfg, res);
  const auto& L = cfg.lemmas;
  bool ok = true;
  Json j;
  const InequalitySweep young = verify_young_grid(L.young_points);
  ok = ok && young.passed();
  j["young"] = sweep_json(young);

  Json models = Json::array();
  std::uint64_t seed = cfg.seed;
  for (double p : L.p_values)
    for (double delta : L.delta_values) {
      const PDeltaModel m{p, delta, cfg.model.mu0, cfg.model.mu};
      const Characteristics c = estimate_characteristics(m, cfg.constants.samples, seed++);
      std::vector<InequalitySweep> sw = verify_pair_inequalities(m, c, L.pairs, seed++);
      sw.push_back(verify_rho_monotone(m, c, 2000, seed++));
      sw.push_back(verify_stress_bound(m, c, 100, 64, seed++));
      Json sj = Json::array();
      for (const auto& s : sw) {
        ok = ok && s.passed();
        sj.push_back(sweep_json(s));
      }
      models.push_back(
          {{"p", p}, {"delta", delta}, {"C1", c.c1}, {"C2", c.c2}, {"C3", c.c3}, {"sweeps", sj}});
    }
  j["models"] = models;

  // operator bounds on random discretely divergence-free fields
  const SpacePtr space = build_space(cfg, L.mesh, L.mesh);
  const double p = cfg.model.p;
  if (p < 2.0) {
    const double s = compute_s(p, 2);
    const LiftField l = lift(boundary_data(cfg, *space), space, p, s, cfg.model.delta);
    const ProblemInstance inst = ProblemInstance::make(cfg.model, l);
    const Characteristics c = estimate_characteristics(cfg.model, cfg.constants.samples, seed++);
    const EmbeddingConstants e = estimate_embeddings(space, p, s, ascent(cfg));
    const std::vector<Field> fields = random_test_fields(space, L.test_fields, seed++, true);
    const LemmaCheck sl = verify_S_lower_bound(inst, c, fields);
    const LemmaCheck cb = verify_convective_bound(inst, e.c_sob(), e.c_korn(), fields);
    ok = ok && sl.passed() && cb.passed();
    j["operators"] = {{"mesh", L.mesh}, {"S_lower_bound", lemma_json(sl)}, {"convective_bound", lemma_json(cb)}};
  }

  // certifier arithmetic
  const RadiusCheck rc = verify_radius_formula(1000, seed++);
  ok = ok && rc.passed();
  const WeightProbe wp = weight_probe(1.0, 0.5, p < 2.0 ? p : 1.5, 1e-3);
  const double pw = p < 2.0 ? p : 1.5;
  const bool theta_ok = std::abs(wp.theta_best - (pw - 1.0)) <= 1e-3 + 1e-12;
  ok = ok && theta_ok;
  j["certifier"] = {{"radius_instances", rc.instances},
                    {"radius_failures", rc.failures},
                    {"radius_worst_relative", rc.worst_rel},
                    {"polynomial_worst_relative", rc.worst_poly},
                    {"weight_probe", {{"p", pw},
                                      {"theta_best", wp.theta_best},
                                      {"theta_expected", pw - 1.0},
                                      {"g3_best", wp.g3_best},
                                      {"g3_sharp", wp.g3_sharp},
                                      {"passed", theta_ok}}}};
  j["passed"] = ok;
  out.json("lemmas.json", j);
  res.exit_code = ok ? kExitOk : kExitConditionFails;
  res.message = ok ? "all lemma checks passed" : "a lemma check failed";
  return res;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"check-tensor", "lift",           "certify",
                                              "solve",        "counterexample", "verify-lemmas"};
  return names;
}

CommandResult run_command(const std::string& name, const RunConfig& cfg) {
  CommandResult res;
  try {
    if (name == "check-tensor") return cmd_check_tensor(cfg);
    if (name == "lift") return cmd_lift(cfg);
    if (name == "certify") return cmd_certify(cfg);
    if (name == "solve") return cmd_solve(cfg);
    if (name == "counterexample") return cmd_counterexample(cfg);
    if (name == "verify-lemmas") return cmd_verify_lemmas(cfg);
    res.exit_code = kExitInvalidConfig;
    res.message = "unknown command " + name;
  } catch (const IncompatibleData& e) {
    res.exit_code = kExitInvalidConfig;
    res.message = e.what();
  } catch (const ConfigError& e) {
    res.exit_code = kExitInvalidConfig;
    res.message = e.what();
  } catch (const ExpressionError& e) {
    res.exit_code = kExitInvalidConfig;
    res.message = e.what();
  } catch (const FamilyError& e) {
    res.exit_code = kExitInvalidConfig;
    res.message = e.what();
  } catch (const MissingProvenance& e) {
    res.exit_code = kExitNumericalFailure;
    res.message = e.what();
  } catch (const std::invalid_argument& e) {
    res.exit_code = kExitInvalidConfig;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = kExitNumericalFailure;
    res.message = e.what();
  }
  return res;
}

}  // namespace shearlab
