#pragma once

// Extra stress tensors with p-delta structure and numerical checks of the
// algebraic inequalities they satisfy.

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace shearlab {

/// Power-law parameters: S(A) = mu0 A + mu (delta + |A|)^(p-2) A.
struct PDeltaModel {
  double p = 2.0;
  double delta = 0.0;
  double mu0 = 0.0;
  double mu = 1.0;

  /// Throws std::invalid_argument unless 1 < p <= 2, delta >= 0, mu0 >= 0, mu > 0.
  void validate() const;
};

/// Real symmetric d x d matrix, d in {2, 3}. Only the upper triangle is stored,
/// so symmetry is exact by construction.
class SymMat {
 public:
  SymMat() : SymMat(2) {}
  explicit SymMat(int dim);

  /// Symmetrizes a row-major d x d array: (M + M^T) / 2.
  static SymMat from_full(int dim, std::span<const double> row_major);
  static SymMat diag(std::span<const double> values);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return upper_[slot(i, j)]; }
  void set(int i, int j, double v) { upper_[slot(i, j)] = v; }

  /// Frobenius inner product and norm.
  double dot(const SymMat& other) const;
  double norm() const;

  SymMat& operator+=(const SymMat& o);
  SymMat& operator-=(const SymMat& o);
  SymMat& operator*=(double s);
  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator*(double s, SymMat a) { return a *= s; }
  friend SymMat operator-(SymMat a) { return a *= -1.0; }
  bool operator==(const SymMat& o) const = default;

 private:
  int slot(int i, int j) const;
  int dim_;
  std::array<double, 6> upper_{};
};

/// Tensors of the form S(A) = w(|A|) A. New p-delta families implement this.
class RadialStress {
 public:
  virtual ~RadialStress() = default;
  virtual double weight(double norm) const = 0;
  virtual double growth_exponent() const = 0;
  virtual double shift() const = 0;
  /// Batch weights over quadrature points; `floor` bounds the shifted norm from below.
  virtual void weights(std::span<const double> norms, std::span<double> out,
                       double floor) const;

  SymMat operator()(const SymMat& a) const;
};

class PowerLawStress final : public RadialStress {
 public:
  explicit PowerLawStress(PDeltaModel model);
  double weight(double norm) const override;
  double growth_exponent() const override { return model_.p; }
  double shift() const override { return model_.delta; }
  void weights(std::span<const double> norms, std::span<double> out,
               double floor) const override;
  const PDeltaModel& model() const { return model_; }

 private:
  PDeltaModel model_;
};

SymMat eval_stress(const PDeltaModel& model, const SymMat& a);

/// S(A + G).
SymMat shifted_stress(const PDeltaModel& model, const SymMat& shift, const SymMat& a);

struct PairWitness {
  SymMat a;
  SymMat b;
  double ratio = 0.0;
};

/// Empirical characteristics. These are sampled bounds, never a proof.
struct Characteristics {
  double c1 = 0.0;  // monotonicity constant (sampled infimum)
  double c2 = 0.0;  // growth constant (sampled supremum)
  double c3 = 0.0;  // integral lower-bound constant (sampled infimum)
  PairWitness c1_witness;
  PairWitness c2_witness;
  PairWitness c3_witness;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool rigorous = false;
};

struct CharacteristicsOptions {
  int dim = 2;
  double min_magnitude = 1e-4;
  double max_magnitude = 1e4;
  // Local refinement steps around the most extreme sampled pairs.
  int polish_steps = 400;
  int polish_starts = 6;
};

/// Stratified Monte-Carlo estimate of C1, C2, C3 for the power-law tensor.
/// Throws std::invalid_argument for samples < 10^4 and std::runtime_error when
/// every drawn pair is degenerate (A == B).
Characteristics estimate_characteristics(const PDeltaModel& model, std::size_t samples,
                                         std::uint64_t seed,
                                         const CharacteristicsOptions& opts = {});

/// Ratios entering the three characteristics for one pair (A != B).
struct PairRatios {
  double monotone;  // (S(A)-S(B)).(A-B) / [(delta+|B|+|A-B|)^(p-2) |A-B|^2]
  double growth;    // |S(A)-S(B)| / [(delta+|B|+|A-B|)^(p-2) |A-B|]
  double integral;  // (S(A)-S(B)).(A-B) / int_0^{|A-B|} (|B|+delta+s)^(p-2) s ds
  double inner;     // (S(A)-S(B)).(A-B)
  double scale;     // |S(A)-S(B)| |A-B|, reference magnitude for `inner`
};
PairRatios pair_ratios(const PDeltaModel& model, const SymMat& a, const SymMat& b);

/// int_0^t (a+s)^(p-2) s ds in closed form, with a series for t << a.
double young_integral(double a, double t, double p);

/// int_0^t (a+s)^(p-2) s ds - (t^p/p - t a^(p-1)); nonnegative for p in (1,2].
double young_gap(double a, double t, double p);

/// rho_B(t) = C1 (delta + |B+G| + t)^(p-2) t^2.
double rho_lower_bound(const PDeltaModel& model, const Characteristics& chars,
                       const SymMat& shift, const SymMat& b, double t);
/// d/dt rho_B(t) = C1 (delta + |B+G| + t)^(p-3) t (2 delta + 2|B+G| + p t).
double rho_derivative(const PDeltaModel& model, const Characteristics& chars,
                      const SymMat& shift, const SymMat& b, double t);

/// Random pair generator shared by the estimator and the verification sweep.
class PairSampler {
 public:
  PairSampler(int dim, std::uint64_t seed, double min_magnitude, double max_magnitude);
  /// Pair index i selects the stratum (independent draw or near-pair draw) and
  /// the magnitude decade, so every window of samples covers all decades.
  void draw(std::size_t i, SymMat& a, SymMat& b);
  SymMat random_direction();
  double uniform();

 private:
  double log_uniform(std::size_t stratum, std::size_t strata);
  int dim_;
  std::uint64_t state_;
  double log_lo_;
  double log_hi_;
};

struct InequalitySweep {
  std::string name;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = std::numeric_limits<double>::infinity();  // smallest relative slack seen
  bool passed() const { return violations == 0; }
};

/// Re-checks monotonicity, both bounds of the p-delta definition and the
/// integral bound on fresh samples, against supplied characteristics.
std::vector<InequalitySweep> verify_pair_inequalities(const PDeltaModel& model,
                                                      const Characteristics& chars,
                                                      std::size_t samples,
                                                      std::uint64_t seed,
                                                      double rel_tol = 1e-10,
                                                      const CharacteristicsOptions& opts = {});

/// young_gap >= -1e-10 (1 + t^p) on {0} U logspace(1e-6, 1e6) squared, for
/// p in {1.05, 1.10, ..., 2.00}.
InequalitySweep verify_young_grid(int points_per_axis = 25);

/// Finite-difference positivity of rho_B on random (G, B) and log-spaced t.
InequalitySweep verify_rho_monotone(const PDeltaModel& model, const Characteristics& chars,
                                    std::size_t trials, std::uint64_t seed);

/// S(A) == S((A-G)+G) to 1e-14 relative on random A, G.
InequalitySweep verify_shift_consistency(const PDeltaModel& model, std::size_t trials,
                                         std::uint64_t seed);

/// Discrete analogue of ||S(Dw)||_{p'} <= C2 || |Dw| + delta ||_p^{p-1} for random
/// matrix fields with uniform weights.
InequalitySweep verify_stress_bound(const PDeltaModel& model, const Characteristics& chars,
                                    std::size_t fields, std::size_t points,
                                    std::uint64_t seed);

}  // namespace shearlab
