#pragma once

// Discrete solution g of div g = g1 in the domain, g = g2 on the boundary:
// g = g_hat + w with g_hat the discrete harmonic extension of the boundary
// interpolant and w a zero-boundary minimal-gradient correction of the divergence.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shearlab/discretization.hpp"

namespace shearlab {

struct BoundaryData {
  ScalarFn g1;  // divergence data; empty means 0
  VectorFn g2;  // boundary velocity; empty means 0
  /// Alternative discrete forms; take precedence over the callables when set.
  std::optional<Field> g1_field;            // P1 scalar field
  std::optional<Eigen::VectorXd> g2_nodal;  // velocity coefficients, boundary entries used

  BoundaryData scaled(double lambda) const;
};

/// int g1 - oint g2 . nu, signed. Boundary integral by 8-point Gauss per edge.
double check_compatibility(const BoundaryData& data, const DiscreteSpace& space);
/// 1e-8 (1 + ||g1||_1).
double compatibility_tolerance(const BoundaryData& data, const DiscreteSpace& space);

/// (oint |g2|^p + oint |d_tau g2|^p)^(1/p) of the discrete boundary trace of u.
double boundary_trace_norm(const Field& u, double p);

struct LiftNorms {
  double w1p = 0.0;      // ||g||_{1,p}
  double w1s = 0.0;      // ||g||_{1,s}
  double sym_s = 0.0;    // ||Dg||_s
  double div_s = 0.0;    // ||div g||_s
  double shifted_p = 0.0;  // || |Dg| + delta ||_p
  double g1_p = 0.0;     // ||g1||_p (P1 projection)
  double boundary_p = 0.0;  // boundary_trace_norm(g, p)
};

struct LiftField {
  Field g, g_hat, w;
  Field g1;  // P1 projection of the divergence data
  double p = 0.0, s = 0.0, delta = 0.0;
  LiftNorms norms;
  double divergence_defect = 0.0;    // || Pi_h (div g - g1) ||_{L2}
  double boundary_defect = 0.0;      // L2 boundary error, equals the interpolation error of g2
  double compatibility_defect = 0.0;
};

struct IncompatibleData : std::runtime_error {
  using std::runtime_error::runtime_error;
  double defect = 0.0;
};

/// Throws IncompatibleData when |defect| exceeds the tolerance, std::runtime_error when the
/// saddle-point system is singular (with the inf-sup value in the message).
LiftField lift(const BoundaryData& data, const SpacePtr& space, double p, double s,
               double delta = 0.0);
/// Several data sets on one space, sharing the factorizations.
std::vector<LiftField> lift(const std::vector<BoundaryData>& data, const SpacePtr& space,
                            double p, double s, double delta = 0.0);

/// Recomputes the norm block of a lift for other exponents.
LiftNorms lift_norms(const LiftField& l, double p, double s, double delta);

/// Zero-boundary, discretely divergence-free fields (B u = 0) closest to each input in the
/// H1 seminorm; one factorization serves the whole batch.
std::vector<Field> solenoidal_projection(const SpacePtr& space, const std::vector<Field>& fields);

struct ProbeTrial {
  double lift_ratio = 0.0;  // ||g_hat||_{1,p} / boundary norm, 0 if g2 = 0
  double bog_ratio = 0.0;   // ||w||_{1,p} / ||g1 - div g_hat||_p
  double g_norm = 0.0;      // ||g||_{1,p}
  double boundary_norm = 0.0;
  double g1_norm = 0.0;
  bool g1_only = false;
};

struct OperatorNormProbe {
  double c_lift_est = 0.0;
  double c_bog_est = 0.0;
  double c_bog_g1_only = 0.0;
  std::vector<ProbeTrial> trials;
  BoundaryData lift_witness, bog_witness;
};

/// Random compatible data sets (smooth boundary modes, P1 divergence data). Witness data of
/// `previous` (e.g. a coarser probe) are re-lifted as extra trials.
OperatorNormProbe operator_norm_probe(const SpacePtr& space, int trials, double p,
                                      std::uint64_t seed,
                                      const OperatorNormProbe* previous = nullptr);

}  // namespace shearlab
