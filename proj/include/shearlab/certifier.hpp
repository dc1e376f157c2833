#pragma once

// Dependent constants G1, G2, G3 of the coercivity estimate, the smallness
// condition and the coercivity radius, plus the low-regularity alternative bound.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shearlab/constitutive.hpp"
#include "shearlab/embedding.hpp"
#include "shearlab/lifting.hpp"

namespace shearlab {

/// max{p, (p*/2)'}; requires p in (2d/(d+2), 2) and d in {2, 3}.
double compute_s(double p, int d);
/// Branch form: p for p > 3d/(d+2), (p*/2)' otherwise.
double compute_s_branch(double p, int d);

struct MissingProvenance : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Everything the constants depend on. Any empty slot is an error.
struct CertifierInputs {
  std::optional<Characteristics> chars;
  std::optional<EmbeddingConstants> embeddings;
  std::optional<LiftNorms> lift;
  std::optional<double> f_norm;  // discrete dual norm of the load
  double p = 0.0;
  double s = 0.0;
  double delta = 0.0;
  int d = 2;
};

struct GConstants {
  double g1 = 0.0, g2 = 0.0, g3 = 0.0;
};

GConstants compute_constants(double c2, double c3, double c_sob, double c_korn,
                             const LiftNorms& lift, double f_norm, double p);
/// Throws MissingProvenance when a slot of `in` is unset.
GConstants compute_constants(const CertifierInputs& in);

struct Provenance {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double c_sob = 0.0, c_korn = 0.0;
  double korn_raw = 0.0, sob_a_raw = 0.0, sob_b_raw = 0.0, sob_c_raw = 0.0;
  bool embeddings_converged = false;
  LiftNorms lift;
  double f_norm = 0.0;
  double compatibility_defect = 0.0;
  double divergence_defect = 0.0;
};

struct CoercivityReport {
  double p = 0.0, s = 0.0;
  int d = 2;
  double g1 = 0.0, g2 = 0.0, g3 = 0.0;
  double lhs = 0.0, rhs = 0.0;
  bool satisfied = false;
  std::optional<double> radius;
  bool s_branch_consistent = true;
  std::optional<Provenance> provenance;
  std::string label = "numerical certificate (sampled constants, not a proof)";
};

/// (2-p)^(2-p) (p-1)^(p-1) G1 >= G2^(p-1) G3^(2-p), ties satisfied; p in (1, 2).
CoercivityReport check_smallness(const GConstants& g, double p);

/// R = [G3 / ((2-p) G1)]^(1/(p-1)), 0 when G3 = 0.
double coercivity_radius(const GConstants& g, double p);

/// G1 R^p - G2 R^2 - G3 R.
double polynomial_positivity_check(const GConstants& g, double p, double radius);

struct RadiusCheck {
  std::size_t instances = 0;  // satisfied instances checked
  std::size_t drawn = 0;
  std::size_t failures = 0;
  double worst_rel = 0.0;     // max |(2-p) G1 R^(p-1) - G3| / G3
  double worst_poly = 0.0;    // most negative G1 R^p - G2 R^2 - G3 R, relative to G1 R^p
  bool passed() const { return failures == 0; }
};

/// Random (p, G1, G2, G3) with log-uniform constants; on each satisfied instance the
/// radius must return G3 through (2-p) G1 R^(p-1) and keep the polynomial nonnegative.
RadiusCheck verify_radius_formula(std::size_t instances, std::uint64_t seed,
                                  double rel_tol = 1e-10);

/// Splitting G1 R^p with weights (theta, 1 - theta): the largest G3 for which the
/// split argument closes, at fixed G1, G2.
double split_admissible_g3(double g1, double g2, double p, double theta);
/// The same quantity by bisection on G3 against the two split inequalities.
double split_admissible_g3_bisect(double g1, double g2, double p, double theta);

struct WeightProbe {
  std::vector<double> theta;
  std::vector<double> g3_max;
  double theta_best = 0.0;
  double g3_best = 0.0;
  /// sup_R (G1 R^(p-1) - G2 R): the largest G3 with G1 R^p - G2 R^2 - G3 R >= 0 for some R.
  double g3_sharp = 0.0;
};

/// Scan of split_admissible_g3 over theta = step, 2 step, ..., 1 - step.
WeightProbe weight_probe(double g1, double g2, double p, double step = 1e-3);

struct AlternativeRow {
  double radius = 0.0;  // ||Du||_p
  double k = 0.0;
  double y = 0.0;      // ||Du||_q = k R
  double value = 0.0;  // G1 R^p - F1 y - F2 R y
};

struct AlternativeBound {
  double f1 = 0.0, f2 = 0.0, g1 = 0.0, p = 0.0, q = 0.0;
  std::vector<AlternativeRow> scan;
};

/// G1 a^p - F1 b - F2 a b with a = ||Du||_p, b = ||Du||_q.
double alternative_bound(double f1, double f2, double g1, double p, double a, double b);

AlternativeBound alternative_bound_scan(double f1, double f2, double g1, double p, double q,
                                        const std::vector<double>& radii,
                                        const std::vector<double>& k_grid = {1, 10, 100, 1e3,
                                                                             1e4});

/// F1, F2 for data g in W^{1,p}: the convective part of both constants follows the
/// upper bound for T with p-norms of g; the linear terms of S and f are moved to
/// ||Du||_q by Hoelder, ||Du||_p <= |Omega|^(1/p - 1/q) ||Du||_q.
struct AlternativeConstants {
  double f1 = 0.0, f2 = 0.0;
};
AlternativeConstants alternative_constants(double c2, double c3, double c_sob, double c_korn,
                                           double g_w1p, double sym_p, double div_p,
                                           double shifted_p, double f_norm, double p,
                                           double q, double area);

/// One row of a data-scaling study.
struct SweepRow {
  double lambda = 0.0;
  GConstants g;
  double lhs = 0.0, rhs = 0.0;
  bool satisfied = false;
  double radius = 0.0;  // NaN when unsatisfied
};

/// Re-lifts lambda * data for every lambda and re-evaluates the condition.
/// `base` supplies characteristics, embeddings and the load norm.
std::vector<SweepRow> scaling_sweep(const BoundaryData& data, const SpacePtr& space,
                                    const CertifierInputs& base,
                                    const std::vector<double>& lambdas);

/// Number of satisfied -> violated switches along the rows.
int count_transitions(const std::vector<SweepRow>& rows);

std::string sweep_csv(const std::vector<SweepRow>& rows);

/// <f, phi_k> for a body force given at the quadrature points.
Eigen::VectorXd load_vector(const DiscreteSpace& space, const VectorFn& f);

}  // namespace shearlab
