#pragma once

// Discrete estimates of Korn and Sobolev embedding constants and of dual norms,
// by norm-ratio maximization over the finite element space. All values are lower
// bounds for the discrete constants; none is a proof.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shearlab/discretization.hpp"

namespace shearlab {

struct AscentOptions {
  int iters = 200;
  int starts = 3;
  std::uint64_t seed = 1;
  double tol = 1e-10;  // relative objective change treated as stationary
  /// Coarse-mesh maximizer, prolongated and used as an extra start.
  std::optional<Field> warm_start;
};

struct RatioEstimate {
  double value = 0.0;
  Field witness;
  int iterations = 0;
  bool converged = false;
};

/// p* = p d / (d - p) for p < d, +inf otherwise.
double critical_exponent(double p, int d);

/// sup ||grad u||_p / ||Du||_p over zero-boundary fields. p = 2 uses power iteration
/// on the generalized eigenproblem; other p use preconditioned gradient ascent.
RatioEstimate estimate_korn(const SpacePtr& space, double p, const AscentOptions& opts = {});

/// sup ||u||_r / ||u||_{1,p}. With zero_boundary, fields vanish on the boundary and the
/// denominator is ||grad u||_p. Throws std::invalid_argument for r > p*.
RatioEstimate estimate_sobolev(const SpacePtr& space, double from_p, double to_r,
                               const AscentOptions& opts = {}, bool zero_boundary = false);

/// sup <f, phi> / ||D phi||_p over zero-boundary phi; `load` holds <f, phi_k> for every
/// velocity dof (boundary entries are ignored).
RatioEstimate dual_norm(const SpacePtr& space, const Eigen::VectorXd& load, double p,
                        const AscentOptions& opts = {});

/// Constants entering the convective bound. The Sobolev constant appearing there
/// multiplies three Hoelder steps, each with its own embedding:
///   c_A: W^{1,p}_0 -> L^{2s'} (zero boundary, the velocity u),
///   c_B: W^{1,s}   -> L^{2p'} (the lift g),
///   c_C: W^{1,s}   -> L^{2s'} (the lift g),
/// and c_Sob = max(c_A^2, c_B^2, c_A c_C) bounds each product that occurs.
struct EmbeddingConstants {
  double p = 0.0;
  double s = 0.0;
  double korn_p = 0.0;
  double sob_p_to_pstar = 0.0;  // c_A, target exponent in sob_p_target
  double sob_p_target = 0.0;
  double sob_s_to_2pprime = 0.0;  // c_B
  double sob_s_to_2sprime = 0.0;  // c_C
  // raw maxima before the max(1, .) normalization
  double korn_raw = 0.0, sob_a_raw = 0.0, sob_b_raw = 0.0, sob_c_raw = 0.0;
  Field korn_witness, sob_a_witness, sob_b_witness, sob_c_witness;
  bool converged = false;
  bool rigorous = false;

  double c_sob() const;
  double c_korn() const { return korn_p; }
};

EmbeddingConstants estimate_embeddings(const SpacePtr& space, double p, double s,
                                       const AscentOptions& opts = {});

}  // namespace shearlab
