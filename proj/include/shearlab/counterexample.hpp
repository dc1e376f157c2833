#pragma once

// Finite-dimensional model of the failure of local coercivity for low-regularity
// data: a family of fields whose ||D.||_q / ||D.||_p ratio grows under refinement, and
// fields on the sphere ||u||_{Y_n} = R where P_n(u) < 0.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shearlab/discretization.hpp"

namespace shearlab {

struct FamilyError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FamilyMember {
  int level = 0;       // hat built on the (2^level x 2^level) mesh
  Field u;             // normalized to ||Du||_p = 1
  double norm_p = 1.0;  // ||Du||_p
  double norm_q = 0.0;  // ||Du||_q = ||u||_Y
  double ratio = 0.0;   // norm_q / norm_p
};

struct TwoNormFamily {
  double p = 0.0, q = 0.0;
  SpacePtr space;  // common finest space
  std::vector<FamilyMember> members;

  double min_ratio() const;
  double max_ratio() const;
};

/// Members k = 1..levels: the first velocity component is the P1 hat at the centre vertex
/// of the 2^k mesh, represented exactly on the 2^levels P2 space. Throws FamilyError for
/// levels < 3, p >= q, or a non-increasing ratio sequence.
TwoNormFamily build_family(int levels, double p, double q,
                           const RectDomain& domain = {0.0, 0.0, 1.0, 1.0, 2});

/// y_n = (n F1 / c2)^(1/(q-1)), the root of t_n(x) = (c2/n) x^(q-1) - F1.
double find_y_n(double n, double c2, double f1, double q);
double t_n(double x, double n, double c2, double f1, double q);

/// max{n^(-2/(2q-1)) ||Du||_q, ||Du||_p}.
double y_n_norm(double norm_p, double norm_q, double n, double q);

struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Construction {
  Field u;
  int member_lo = 0, member_hi = 0;  // indices into family.members
  double theta = 0.0;  // u proportional to (1 - theta) lo + theta hi
  double norm_p = 0.0, norm_q = 0.0;
  double sphere = 0.0;  // ||u||_{Y_n}
  int bisection_steps = 0;
};

/// Achievable ||u||_Y on the sphere: [R min(rho_min, n^a), R min(rho_max, n^a)], a = 2/(2q-1).
std::pair<double, double> y_range(const TwoNormFamily& family, double n, double radius);

/// Field with ||u||_{Y_n} = R and ||u||_Y = y along the path between the lowest- and
/// highest-ratio members. Throws RangeError when y is outside y_range.
Construction construct_u_n(const TwoNormFamily& family, double n, double radius, double y,
                           double rel_tol = 1e-12);

/// G1 ||Du||_p^p + (1/n) ||u||_Y^q - F1 ||u||_Y.
double evaluate_P_n(double norm_p, double norm_q, double n, double g1, double f1, double p,
                    double q);
double evaluate_P_n(const Field& u, double n, double g1, double f1, double p, double q);

struct CounterexampleParams {
  double p = 1.5, q = 3.0;
  double radius = 1.0, f1 = 1.0, g1 = 1.0;
  double c2 = 2.0;
  double c1 = 0.0;  // 0 selects 2 R^(q-1) / F1 (1 + 1e-3)
  int levels = 4;
  std::vector<double> n_values;  // empty selects 1, 2, ..., 64 and 2^7 .. 2^14

  CounterexampleParams resolved() const;
};

struct CounterexampleRecord {
  double n = 0.0;
  double c1 = 0.0, c2 = 0.0, f1 = 0.0, g1 = 0.0, radius = 0.0, p = 0.0, q = 0.0;
  int branch = 0;  // 1: member with G1 ||Du||_p^p < F1/2 ||u||_Y, 2: prescribed y_n, 0: none
  double y_n = 0.0;
  double y_target = 0.0;  // the Y-norm actually realized
  double f_n = 0.0;       // discrete inf ||u||_{Y_n} / ||u||_Y over the family
  std::string member_mix;
  double sphere = 0.0;
  double P_n = 0.0;
  double margin = 0.0;  // -P_n
  bool step2_bound_holds = false;  // P_n <= G1 R^p + y^q/n - F1 y, Step-2 rows
};

struct CounterexampleRun {
  CounterexampleParams params;
  std::vector<double> ratios;
  std::vector<CounterexampleRecord> rows;
  std::optional<double> n0;  // first grid n from which every row has P_n < 0
  bool margin_increasing = false;  // over rows with n >= n0
};

CounterexampleRun run_counterexample(const CounterexampleParams& params);

std::string counterexample_csv(const CounterexampleRun& run);

}  // namespace shearlab
