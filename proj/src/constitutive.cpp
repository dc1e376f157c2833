#include "shearlab/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "shearlab/kernels/kernels.hpp"

namespace shearlab {

void PDeltaModel::validate() const {
  if (!(p > 1.0 && p <= 2.0))
    throw std::invalid_argument("model: growth exponent p must lie in (1, 2], got " +
                                std::to_string(p));
  if (!(delta >= 0.0)) throw std::invalid_argument("model: delta must be >= 0");
  if (!(mu0 >= 0.0)) throw std::invalid_argument("model: mu0 must be >= 0");
  if (!(mu > 0.0)) throw std::invalid_argument("model: mu must be > 0");
}

// ---------------------------------------------------------------------------
// SymMat

SymMat::SymMat(int dim) : dim_(dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("SymMat: dimension must be 2 or 3");
}

int SymMat::slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (dim_ == 2) return i == 0 ? j : 2;
  static constexpr int base[3] = {0, 3, 5};
  return base[i] + (j - i);
}

SymMat SymMat::from_full(int dim, std::span<const double> m) {
  if (m.size() != static_cast<std::size_t>(dim * dim))
    throw std::invalid_argument("SymMat::from_full: wrong entry count");
  SymMat s(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) s.set(i, j, 0.5 * (m[i * dim + j] + m[j * dim + i]));
  return s;
}

SymMat SymMat::diag(std::span<const double> values) {
  SymMat s(static_cast<int>(values.size()));
  for (int i = 0; i < s.dim(); ++i) s.set(i, i, values[i]);
  return s;
}

double SymMat::dot(const SymMat& o) const {
  double acc = 0.0;
  for (int i = 0; i < dim_; ++i) {
    acc += (*this)(i, i) * o(i, i);
    for (int j = i + 1; j < dim_; ++j) acc += 2.0 * (*this)(i, j) * o(i, j);
  }
  return acc;
}

double SymMat::norm() const { return std::sqrt(dot(*this)); }

SymMat& SymMat::operator+=(const SymMat& o) {
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] += o.upper_[k];
  return *this;
}

SymMat& SymMat::operator-=(const SymMat& o) {
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] -= o.upper_[k];
  return *this;
}

SymMat& SymMat::operator*=(double s) {
  for (double& v : upper_) v *= s;
  return *this;
}

// ---------------------------------------------------------------------------
// Tensors

void RadialStress::weights(std::span<const double> norms, std::span<double> out,
                           double floor) const {
  for (std::size_t i = 0; i < norms.size(); ++i)
    out[i] = weight(std::max(norms[i], floor - shift()));
}

SymMat RadialStress::operator()(const SymMat& a) const {
  const double n = a.norm();
  if (n == 0.0) return SymMat(a.dim());
  return weight(n) * a;
}

PowerLawStress::PowerLawStress(PDeltaModel model) : model_(model) { model_.validate(); }

double PowerLawStress::weight(double norm) const {
  return model_.mu0 + model_.mu * std::pow(model_.delta + norm, model_.p - 2.0);
}

void PowerLawStress::weights(std::span<const double> norms, std::span<double> out,
                             double floor) const {
  kernels::power_weight(norms, out,
                        {model_.mu0, model_.mu, model_.delta, model_.p - 2.0, floor});
}

SymMat eval_stress(const PDeltaModel& m, const SymMat& a) {
  const double n = a.norm();
  if (n == 0.0) return SymMat(a.dim());
  return (m.mu0 + m.mu * std::pow(m.delta + n, m.p - 2.0)) * a;
}

SymMat shifted_stress(const PDeltaModel& m, const SymMat& shift, const SymMat& a) {
  return eval_stress(m, a + shift);
}

// ---------------------------------------------------------------------------
// Scalar inequalities

double young_integral(double a, double t, double p) {
  if (t == 0.0) return 0.0;
  if (a == 0.0) return std::pow(t, p) / p;
  if (p == 2.0) return 0.5 * t * t;
  const double r = t / a;
  if (r < 0.25) {
    // a^(p-2) t^2 sum_k binom(p-2, k) r^k / (k+2)
    const double alpha = p - 2.0;
    double coeff = 1.0;
    double rk = 1.0;
    double sum = 0.5;
    for (int k = 0; k < 60; ++k) {
      coeff *= (alpha - k) / (k + 1.0);
      rk *= r;
      const double term = coeff * rk / (k + 3.0);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return std::pow(a, alpha) * t * t * sum;
  }
  const double l = std::log1p(r);
  return std::pow(a, p) * (std::expm1(p * l) / p - std::expm1((p - 1.0) * l) / (p - 1.0));
}

double young_gap(double a, double t, double p) {
  return young_integral(a, t, p) - (std::pow(t, p) / p - t * std::pow(a, p - 1.0));
}

double rho_lower_bound(const PDeltaModel& m, const Characteristics& chars, const SymMat& shift,
                       const SymMat& b, double t) {
  if (t == 0.0) return 0.0;
  return chars.c1 * std::pow(m.delta + (b + shift).norm() + t, m.p - 2.0) * t * t;
}

double rho_derivative(const PDeltaModel& m, const Characteristics& chars, const SymMat& shift,
                      const SymMat& b, double t) {
  const double nb = (b + shift).norm();
  const double base = m.delta + nb + t;
  if (base == 0.0) return 0.0;
  return chars.c1 * std::pow(base, m.p - 3.0) * t * (2.0 * m.delta + 2.0 * nb + m.p * t);
}

PairRatios pair_ratios(const PDeltaModel& m, const SymMat& a, const SymMat& b) {
  const SymMat e = a - b;
  const SymMat ds = eval_stress(m, a) - eval_stress(m, b);
  const double ne = e.norm();
  const double nb = b.norm();
  const double w = std::pow(m.delta + nb + ne, m.p - 2.0);
  const double inner = ds.dot(e);
  const double nds = ds.norm();
  PairRatios r{};
  r.inner = inner;
  r.scale = nds * ne;
  r.monotone = inner / (w * ne * ne);
  r.growth = nds / (w * ne);
  r.integral = inner / young_integral(nb + m.delta, ne, m.p);
  return r;
}

// ---------------------------------------------------------------------------
// Sampling

PairSampler::PairSampler(int dim, std::uint64_t seed, double lo, double hi)
    : dim_(dim), state_(seed ^ 0x9E3779B97F4A7C15ULL), log_lo_(std::log10(lo)),
      log_hi_(std::log10(hi)) {
  if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("PairSampler: bad magnitude range");
}

double PairSampler::uniform() {
  // splitmix64; platform independent, unlike std:: distributions
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

SymMat PairSampler::random_direction() {
  SymMat s(dim_);
  double norm2 = 0.0;
  auto gauss = [this] {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  do {
    for (int i = 0; i < dim_; ++i) {
      s.set(i, i, gauss());
      for (int j = i + 1; j < dim_; ++j) s.set(i, j, gauss() / std::sqrt(2.0));
    }
    norm2 = s.dot(s);
  } while (norm2 < 1e-20);
  return (1.0 / std::sqrt(norm2)) * s;
}

double PairSampler::log_uniform(std::size_t stratum, std::size_t strata) {
  const double u = (static_cast<double>(stratum) + uniform()) / static_cast<double>(strata);
  return std::pow(10.0, log_lo_ + (log_hi_ - log_lo_) * u);
}

void PairSampler::draw(std::size_t i, SymMat& a, SymMat& b) {
  const std::size_t decades = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                           std::lround(log_hi_ - log_lo_)));
  const std::size_t stratum = (i / 2) % decades;
  const double nb = log_uniform(stratum, decades);
  b = nb * random_direction();
  if (i % 2 == 0) {
    const double na = log_uniform((stratum * 5 + 3) % decades, decades);
    a = na * random_direction();
  } else {
    // near pair: |A-B| / |B| log-uniform in [1e-4, 1]
    const double ratio = std::pow(10.0, -4.0 + 4.0 * uniform());
    a = b + (ratio * nb) * random_direction();
  }
}

namespace {

struct Extremum {
  double value;
  SymMat a;
  SymMat b;
};

enum class Target { monotone, growth, integral };

double target_value(const PairRatios& r, Target t) {
  switch (t) {
    case Target::monotone: return r.monotone;
    case Target::growth: return r.growth;
    case Target::integral: return r.integral;
  }
  return 0.0;
}

// Keeps the k best pairs; `better(x, y)` is true when x is more extreme.
template <class Better>
void keep_best(std::vector<Extremum>& best, std::size_t k, Extremum cand, Better better) {
  if (best.size() < k) {
    best.push_back(std::move(cand));
  } else {
    auto worst = std::min_element(best.begin(), best.end(), [&](const auto& x, const auto& y) {
      return better(y.value, x.value);
    });
    if (!better(cand.value, worst->value)) return;
    *worst = std::move(cand);
  }
}

SymMat clamp_magnitude(SymMat m, double lo, double hi) {
  const double n = m.norm();
  if (n < lo) return (lo / n) * m;
  if (n > hi) return (hi / n) * m;
  return m;
}

// Random-walk refinement of a pair towards a more extreme ratio.
template <class Better>
Extremum polish(const PDeltaModel& model, Extremum start, Target target, Better better,
                PairSampler& rng, const CharacteristicsOptions& opts) {
  double step = 0.2;
  int failures = 0;
  for (int it = 0; it < opts.polish_steps && step > 1e-8; ++it) {
    const SymMat e = start.a - start.b;
    const double ne = e.norm();
    const double nb = start.b.norm();
    SymMat b2 = start.b + (step * nb) * rng.random_direction();
    SymMat e2 = e + (step * ne) * rng.random_direction();
    // magnitude moves in log space
    b2 *= std::pow(10.0, step * (2.0 * rng.uniform() - 1.0));
    e2 *= std::pow(10.0, step * (2.0 * rng.uniform() - 1.0));
    b2 = clamp_magnitude(b2, opts.min_magnitude, opts.max_magnitude);
    const double ratio = e2.norm() / b2.norm();
    if (ratio < 1e-4) e2 *= 1e-4 / ratio;
    const SymMat a2 = clamp_magnitude(b2 + e2, opts.min_magnitude, opts.max_magnitude);
    if ((a2 - b2).norm() < 1e-4 * b2.norm()) continue;
    const double v = target_value(pair_ratios(model, a2, b2), target);
    if (std::isfinite(v) && better(v, start.value)) {
      start = {v, a2, b2};
      failures = 0;
    } else if (++failures > 12) {
      step *= 0.6;
      failures = 0;
    }
  }
  return start;
}

}  // namespace

Characteristics estimate_characteristics(const PDeltaModel& model, std::size_t samples,
                                         std::uint64_t seed,
                                         const CharacteristicsOptions& opts) {
  model.validate();
  if (samples < 10000)
    throw std::invalid_argument("estimate_characteristics: need at least 1e4 samples");

  PairSampler rng(opts.dim, seed, opts.min_magnitude, opts.max_magnitude);
  const auto less = [](double x, double y) { return x < y; };
  const auto greater = [](double x, double y) { return x > y; };
  const std::size_t k = static_cast<std::size_t>(std::max(1, opts.polish_starts));
  std::vector<Extremum> lo1, hi2, lo3;
  std::size_t used = 0;

  SymMat a(opts.dim), b(opts.dim);
  for (std::size_t i = 0; i < samples; ++i) {
    rng.draw(i, a, b);
    const double ne = (a - b).norm();
    if (ne == 0.0 || ne < 1e-4 * b.norm()) continue;
    const PairRatios r = pair_ratios(model, a, b);
    if (!std::isfinite(r.monotone) || !std::isfinite(r.growth) || !std::isfinite(r.integral))
      continue;
    ++used;
    keep_best(lo1, k, {r.monotone, a, b}, less);
    keep_best(hi2, k, {r.growth, a, b}, greater);
    keep_best(lo3, k, {r.integral, a, b}, less);
  }
  if (used == 0) throw std::runtime_error("estimate_characteristics: all sampled pairs degenerate");

  auto refine = [&](std::vector<Extremum>& pool, Target t, auto better) {
    Extremum best = pool.front();
    for (auto& e : pool) {
      Extremum p = polish(model, e, t, better, rng, opts);
      if (better(p.value, best.value)) best = p;
    }
    return best;
  };
  const Extremum e1 = refine(lo1, Target::monotone, less);
  const Extremum e2 = refine(hi2, Target::growth, greater);
  const Extremum e3 = refine(lo3, Target::integral, less);

  Characteristics c;
  c.c1 = e1.value;
  c.c2 = e2.value;
  c.c3 = e3.value;
  c.c1_witness = {e1.a, e1.b, e1.value};
  c.c2_witness = {e2.a, e2.b, e2.value};
  c.c3_witness = {e3.a, e3.b, e3.value};
  c.samples = used;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------
// Verification sweeps

std::vector<InequalitySweep> verify_pair_inequalities(const PDeltaModel& model,
                                                      const Characteristics& chars,
                                                      std::size_t samples, std::uint64_t seed,
                                                      double rel_tol,
                                                      const CharacteristicsOptions& opts) {
  InequalitySweep mono{"monotonicity"}, lower{"lower_bound_C1"}, growth{"growth_C2"},
      integral{"integral_C3"};
  PairSampler rng(opts.dim, seed, opts.min_magnitude, opts.max_magnitude);
  SymMat a(opts.dim), b(opts.dim);
  auto record = [rel_tol](InequalitySweep& s, double slack) {
    ++s.checked;
    s.worst = std::min(s.worst, slack);
    if (slack < -rel_tol) ++s.violations;
  };
  for (std::size_t i = 0; i < samples; ++i) {
    rng.draw(i, a, b);
    const double ne = (a - b).norm();
    if (ne == 0.0 || ne < 1e-4 * b.norm()) continue;
    const PairRatios r = pair_ratios(model, a, b);
    record(mono, r.scale > 0.0 ? r.inner / r.scale : 0.0);
    record(lower, r.monotone / chars.c1 - 1.0);
    record(growth, 1.0 - r.growth / chars.c2);
    record(integral, r.integral / chars.c3 - 1.0);
  }
  return {mono, lower, growth, integral};
}

InequalitySweep verify_young_grid(int n) {
  InequalitySweep s{"young_gap_grid"};
  std::vector<double> axis{0.0};
  for (int k = 0; k < n; ++k) axis.push_back(std::pow(10.0, -6.0 + 12.0 * k / (n - 1)));
  for (int ip = 1; ip <= 20; ++ip) {
    const double p = 1.0 + 0.05 * ip;
    for (double a : axis)
      for (double t : axis) {
        const double gap = young_gap(a, t, p);
        const double slack = gap / (1.0 + std::pow(t, p));
        ++s.checked;
        s.worst = std::min(s.worst, slack);
        if (!(slack >= -1e-10)) ++s.violations;
      }
  }
  return s;
}

InequalitySweep verify_rho_monotone(const PDeltaModel& model, const Characteristics& chars,
                                    std::size_t trials, std::uint64_t seed) {
  InequalitySweep s{"rho_strictly_increasing"};
  PairSampler rng(2, seed, 1e-3, 1e3);
  for (std::size_t i = 0; i < trials; ++i) {
    const SymMat g = (10.0 * rng.uniform()) * rng.random_direction();
    const SymMat b = (10.0 * rng.uniform()) * rng.random_direction();
    double prev = rho_lower_bound(model, chars, g, b, 0.0);
    for (int k = 0; k <= 48; ++k) {
      const double t = std::pow(10.0, -6.0 + 0.25 * k);
      const double cur = rho_lower_bound(model, chars, g, b, t);
      const double d = rho_derivative(model, chars, g, b, t);
      ++s.checked;
      const double slack = std::min(cur - prev, d) / std::max(cur, 1e-300);
      s.worst = std::min(s.worst, slack);
      if (!(cur > prev) || !(d > 0.0)) ++s.violations;
      prev = cur;
    }
  }
  return s;
}

InequalitySweep verify_shift_consistency(const PDeltaModel& model, std::size_t trials,
                                         std::uint64_t seed) {
  InequalitySweep s{"shift_consistency"};
  PairSampler rng(2, seed, 1e-3, 1e3);
  SymMat a(2), g(2);
  for (std::size_t i = 0; i < trials; ++i) {
    rng.draw(i, a, g);
    const SymMat direct = eval_stress(model, a);
    const SymMat shifted = shifted_stress(model, g, a - g);
    const double err = (direct - shifted).norm() / std::max(direct.norm(), 1e-300);
    ++s.checked;
    s.worst = std::min(s.worst, -err);
    if (err > 1e-14 * std::max(1.0, (a.norm() + g.norm()) / std::max(a.norm(), 1e-300)))
      ++s.violations;
  }
  return s;
}

InequalitySweep verify_stress_bound(const PDeltaModel& model, const Characteristics& chars,
                                    std::size_t fields, std::size_t points, std::uint64_t seed) {
  InequalitySweep s{"stress_bound_S_bdd"};
  PairSampler rng(2, seed, 1e-2, 1e2);
  const double p = model.p;
  const double pc = p / (p - 1.0);
  for (std::size_t f = 0; f < fields; ++f) {
    double lhs = 0.0, rhs = 0.0;
    // Each field has its own magnitude decade so the sweep spans scales.
    const double scale = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    for (std::size_t k = 0; k < points; ++k) {
      const SymMat dw = (scale * std::pow(10.0, rng.uniform() - 0.5)) * rng.random_direction();
      lhs += std::pow(eval_stress(model, dw).norm(), pc);
      rhs += std::pow(dw.norm() + model.delta, p);
    }
    lhs = std::pow(lhs / points, 1.0 / pc);
    rhs = chars.c2 * std::pow(std::pow(rhs / points, 1.0 / p), p - 1.0);
    ++s.checked;
    const double slack = 1.0 - lhs / rhs;
    s.worst = std::min(s.worst, slack);
    if (slack < -1e-10) ++s.violations;
  }
  return s;
}

}  // namespace shearlab
