#pragma once

// Galerkin operators S, T, P, the q-Laplacian penalty, Picard iteration with
// continuation in the penalty level, pressure recovery and convective diagnostics.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shearlab/certifier.hpp"
#include "shearlab/constitutive.hpp"
#include "shearlab/discretization.hpp"
#include "shearlab/expression.hpp"
#include "shearlab/lifting.hpp"

namespace shearlab {

struct ProblemInstance {
  PDeltaModel model;
  SpacePtr space;
  LiftField lift;
  /// <f, phi_k> for every velocity dof (boundary entries ignored).
  Eigen::VectorXd load;
  std::optional<CoercivityReport> report;
  bool convection = true;

  /// Zero load when `load` is empty. Throws std::invalid_argument on a space mismatch.
  static ProblemInstance make(const PDeltaModel& model, const LiftField& lift,
                              Eigen::VectorXd load = {},
                              std::optional<CoercivityReport> report = std::nullopt);
};

inline constexpr double kNoPenalty = std::numeric_limits<double>::infinity();

struct SolverConfig {
  double q = 0.0;                // 0 selects max{2, s} + 1
  std::vector<double> n_schedule;  // empty selects 10 * 4^k, k = 0..6
  double picard_tol = 1e-10;
  int picard_max = 200;
  double linear_tol = 1e-12;     // accepted relative residual of each linear solve
  double weight_floor = 1e-10;   // lower bound on delta + |Dv| inside the frozen weights
  double bound_slack = 0.05;
  bool override_certification = false;

  /// Fills defaults and checks q > max{2, s}, increasing schedule, positive tolerances.
  SolverConfig resolved(double s) const;
};

std::vector<double> default_schedule();

// Residual vectors, one entry per velocity dof: phi_k -> <X(u), phi_k>.
Eigen::VectorXd residual_S(const ProblemInstance& inst, const Field& u);
Eigen::VectorXd residual_T(const ProblemInstance& inst, const Field& u);
Eigen::VectorXd residual_P(const ProblemInstance& inst, const Field& u);
/// (1/n) <|Du|^(q-2) Du, D phi_k>; zero for n = kNoPenalty.
Eigen::VectorXd residual_penalty(const DiscreteSpace& space, const Field& u, double q,
                                 double n);

double apply_S(const ProblemInstance& inst, const Field& u, const Field& phi);
double apply_T(const ProblemInstance& inst, const Field& u, const Field& phi);
double apply_P(const ProblemInstance& inst, const Field& u, const Field& phi);

/// ||(1/n) |Du|^(q-2) Du||_{q'} by quadrature.
double penalty_norm(const Field& u, double q, double n);

struct LevelRecord {
  double n = 0.0;
  int iterations = 0;
  double residual = 0.0;  // relative nonlinear residual at exit
  std::vector<double> residual_history;
  double penalty_norm = 0.0;
  double norm_Du_p = 0.0;
  double norm_Du_q = 0.0;
  double successive_diff = std::numeric_limits<double>::quiet_NaN();  // ||D(u^n - u^prev)||_p
  double y_norm = 0.0;            // max{n^(-2/(2q-1)) ||Du||_q, ||Du||_p}
  double penalty_envelope = std::numeric_limits<double>::quiet_NaN();  // n^(-1/(2q-1)) R^(q-1)
  bool converged = false;
  bool energy_ok = true;   // ||Du||_p <= R (1 + slack), when R is known
  bool penalty_ok = true;
};

struct LevelSolution {
  LevelRecord record;
  Field u;
  Field pi;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CertificationRequired : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One penalty level. Picard: the weights (delta + |Du_k + Dg|)^(p-2) and (1/n)|Du_k|^(q-2)
/// and the transport field u_k + g are frozen, the linear mixed system is solved, repeat.
/// Throws SolverError on a linear breakdown or non-finite iterates.
LevelSolution solve_regularized(const ProblemInstance& inst, const SolverConfig& cfg,
                                double n, const Field& warm_start);

struct SolveResult {
  Field u, v, pi;
  std::vector<LevelRecord> levels;
  std::optional<double> radius;
  double q = 0.0;
  bool converged = false;
  bool energy_ok = true;
  bool penalty_ok = true;
  bool aborted = false;
  std::string message;
};

/// Runs the schedule with warm starts. Throws CertificationRequired when the instance
/// has no satisfied report and the override is off. A Picard failure ends the run with
/// aborted = true and the levels completed so far.
SolveResult continuation_solve(const ProblemInstance& inst, const SolverConfig& cfg);

struct PressureRecovery {
  Field pi;
  double residual = 0.0;  // ||P(u) + pen - B^T pi|| / reference, free dofs
};

/// Least-squares pressure for the residual of u, mean zero.
PressureRecovery recover_pressure(const ProblemInstance& inst, const Field& u,
                                  double q = 3.0, double n = kNoPenalty);

/// Convective integrals. Gradient convention (grad u)_ij = d_j u_i.
struct ConvectiveDefects {
  double e1 = 0.0;  // <u x u, Du>
  double e2 = 0.0;  // int u_i g_j d_i u_j + <u x u, Dg>
  double e3 = 0.0;  // int u_i g_j d_j u_i + 1/2 <g1 u, u>
  double e4 = 0.0;  // <T(u), u> + regrouped form
  double t_direct = 0.0;
  double t_regrouped = 0.0;  // -<u x u, Dg> + 1/2 <g1 u, u> + <g x g, Du> + <g1 g, u>
};

ConvectiveDefects convective_identity_diagnostics(const DiscreteSpace& space,
                                                  const VelocityQp& u, const VelocityQp& g);
ConvectiveDefects convective_identity_diagnostics(const ProblemInstance& inst, const Field& u);

/// Right-hand side of the convective bound:
/// c_Sob c_Korn^2 (||Dg||_s + ||div g||_s / 2) ||Du||_p^2
///   + c_Sob (||g||_{1,s}^2 + c_Korn ||div g||_s ||g||_{1,s}) ||Du||_p.
double convective_bound(double c_sob, double c_korn, const LiftNorms& g, double norm_du_p);

/// Random zero-boundary test fields: smooth cosine modes times a bubble and mesh-scale
/// nodal noise, amplitudes log-spaced over [1e-3, 1e3]. With `solenoidal` each field is
/// projected onto B u = 0.
std::vector<Field> random_test_fields(const SpacePtr& space, int count, std::uint64_t seed,
                                      bool solenoidal);

struct LemmaCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = std::numeric_limits<double>::infinity();  // smallest relative slack
  double max_skew = 0.0;  // largest discrete <u x u, Du> seen (convective check only)
  bool passed() const { return violations == 0; }
};

/// <S(u), u> >= (C3/p) ||Du||_p^p - (C2 + C3) || |Dg| + delta ||_p^(p-1) ||Du||_p
/// with S(u) tested as S(D(u + g)), for every field.
LemmaCheck verify_S_lower_bound(const ProblemInstance& inst, const Characteristics& chars,
                                const std::vector<Field>& fields, double rel_tol = 1e-10);

/// |<T(u), u>| <= convective_bound(c_sob, c_korn, lift norms, ||Du||_p) + |<u x u, Du>|,
/// the last term being the measured skew defect of the discretely divergence-free u.
LemmaCheck verify_convective_bound(const ProblemInstance& inst, double c_sob, double c_korn,
                                   const std::vector<Field>& fields, double rel_tol = 1e-10);

/// Values and gradients at the quadrature points of an analytic velocity.
VelocityQp analytic_qp(const DiscreteSpace& space, const Expression& v0, const Expression& v1);

/// Weak load making (v*, pi*) an exact solution:
/// <f, phi> = <S(Dv*), D phi> + <(v* . grad) v*, phi> - <pi*, div phi>.
Eigen::VectorXd manufactured_load(const DiscreteSpace& space, const PDeltaModel& model,
                                  const Expression& v0, const Expression& v1,
                                  const Expression& pi, bool convection);

}  // namespace shearlab
