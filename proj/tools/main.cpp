// shearlab command-line front end.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "shearlab/config.hpp"
#include "shearlab/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace shearlab;
  CLI::App app{"Shear-thinning flow toolkit: tensor checks, lifting, certification, solving"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::int64_t seed = -1;
  bool override_cert = false;
  bool print_config = false;
  const std::map<std::string, std::string> about = {
      {"check-tensor", "estimate C1, C2, C3 and re-check the tensor inequalities"},
      {"lift", "lift the boundary and divergence data, probe the lift bound"},
      {"certify", "constants G1, G2, G3, smallness condition, radius R, scaling sweep"},
      {"solve", "penalized continuation solve, or manufactured convergence study"},
      {"counterexample", "two-norm family and P_n on the sphere"},
      {"verify-lemmas", "Young grid, inequality sweeps, operator bounds, radius checks"}};
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    sub->add_option("--config", config_path, "JSON run configuration (defaults when omitted)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "random seed (overrides the config)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--override-certification", override_cert,
                  "solve even when the smallness condition is not certified");
    sub->add_flag("--print-config", print_config, "print the resolved configuration and exit");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalidConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (override_cert) cfg.solver.override_certification = true;
    cfg.validate();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  if (print_config) {
    std::cout << serialize_config(cfg);
    return kExitOk;
  }
  const CommandResult r = run_command(command, cfg);
  for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
  (r.exit_code == kExitOk ? std::cout : std::cerr) << command << ": " << r.message << "\n";
  return r.exit_code;
}
