#pragma once

// Run configuration: one JSON document per run. Every section is optional and
// falls back to the defaults below; unknown keys are rejected.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shearlab/constitutive.hpp"
#include "shearlab/discretization.hpp"
#include "shearlab/expression.hpp"

namespace shearlab {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MeshConfig {
  int nx = 16, ny = 16;
  int quad_points = 4;
  bool operator==(const MeshConfig&) const = default;
};

struct DataConfig {
  Expression g1;                          // divergence data
  std::array<Expression, 2> g2;           // boundary velocity
  std::array<Expression, 2> f;            // body force
  std::vector<double> g2_nodal;           // optional P2 velocity coefficients, 2 * num_p2
  bool operator==(const DataConfig&) const = default;
};

struct SolverSection {
  double q = 0.0;
  std::vector<double> n_schedule;  // "inf" in JSON for the unpenalized level
  double picard_tol = 1e-10;
  int picard_max = 200;
  double linear_tol = 1e-12;
  double weight_floor = 1e-10;
  double bound_slack = 0.05;
  bool override_certification = false;
  bool operator==(const SolverSection&) const = default;
};

struct ConstantsConfig {
  std::size_t samples = 100000;   // pairs for the characteristics
  int ascent_iters = 100;
  int ascent_starts = 3;
  int probe_trials = 40;          // lifting operator-norm probe, 0 skips it
  bool operator==(const ConstantsConfig&) const = default;
};

struct CounterexampleConfig {
  double p = 1.5, q = 3.0;
  double radius = 1.0, f1 = 1.0, g1 = 1.0;
  double c2 = 2.0, c1 = 0.0;
  int levels = 4;
  std::vector<double> n_values;
  bool operator==(const CounterexampleConfig&) const = default;
};

struct ManufacturedConfig {
  bool enabled = false;
  std::array<Expression, 2> velocity;
  Expression pressure;
  std::vector<int> meshes{8, 16, 32};
  bool convection = true;
  bool operator==(const ManufacturedConfig&) const = default;
};

struct LemmaConfig {
  std::size_t pairs = 100000;   // fresh pairs per model for the inequality sweeps
  int young_points = 25;
  int test_fields = 40;
  int mesh = 8;
  std::vector<double> p_values{1.2, 1.5, 1.8};
  std::vector<double> delta_values{0.0, 0.1, 1.0};
  bool operator==(const LemmaConfig&) const = default;
};

struct RunConfig {
  PDeltaModel model{1.8, 0.0, 0.0, 1.0};
  RectDomain domain;
  MeshConfig mesh;
  DataConfig data;
  SolverSection solver;
  ConstantsConfig constants;
  std::vector<double> sweep_lambdas;
  CounterexampleConfig counterexample;
  ManufacturedConfig manufactured;
  LemmaConfig lemmas;
  std::uint64_t seed = 1;
  std::string output = "out";

  bool operator==(const RunConfig& o) const;

  /// Range checks on every section; throws ConfigError.
  void validate() const;
};

/// Throws ConfigError on malformed JSON, unknown keys, wrong types, bad expressions
/// or out-of-range values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical JSON with every field written out.
std::string serialize_config(const RunConfig& cfg);

}  // namespace shearlab
