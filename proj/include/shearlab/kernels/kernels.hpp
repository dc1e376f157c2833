#pragma once

// Pointwise batch kernels used by quadrature loops and tensor sampling.
//
// Every kernel has a scalar reference implementation; vectorized variants are
// selected once at runtime from CPU feature detection. All variants of a kernel
// must agree with the scalar reference to within a few ulp (see
// tests/test_kernels.cpp). SHEARLAB_SIMD=scalar in the environment forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace shearlab::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// out = mu0 + mu * pow(max(shift + s, floor), exponent), with pow(0, e) = 0 for e > 0
/// and pow(0, 0) = 1.
struct PowerWeightParams {
  double mu0 = 0.0;
  double mu = 1.0;
  double shift = 0.0;
  double exponent = 0.0;
  double floor = 0.0;
};

struct KernelTable {
  Isa isa;
  // out[i] = sqrt(xx^2 + 2 xy^2 + yy^2): Frobenius norm of a symmetric 2x2 matrix.
  void (*sym_norm2)(const double* xx, const double* xy, const double* yy, double* out,
                    std::size_t n);
  // out[i] = sqrt(a^2 + b^2 + c^2 + d^2): Frobenius norm of a general 2x2 matrix.
  void (*full_norm2)(const double* a, const double* b, const double* c, const double* d,
                     double* out, std::size_t n);
  void (*power_weight)(const double* s, double* out, std::size_t n, PowerWeightParams prm);
  // sum_i w[i] * s[i]^e for s[i] >= 0, e > 0.
  double (*weighted_power_sum)(const double* s, const double* w, std::size_t n, double e);
  // out[i] = x[i]^e for x[i] > 0; 0 for x[i] == 0 and e > 0.
  void (*pow_batch)(const double* x, double e, double* out, std::size_t n);
};

const KernelTable& table(Isa isa);
bool available(Isa isa);

/// Table chosen at first use: best available ISA unless SHEARLAB_SIMD=scalar.
const KernelTable& active();

// Span conveniences over the active table.

inline void sym_norm2(std::span<const double> xx, std::span<const double> xy,
                      std::span<const double> yy, std::span<double> out) {
  active().sym_norm2(xx.data(), xy.data(), yy.data(), out.data(), out.size());
}

inline void full_norm2(std::span<const double> a, std::span<const double> b,
                       std::span<const double> c, std::span<const double> d,
                       std::span<double> out) {
  active().full_norm2(a.data(), b.data(), c.data(), d.data(), out.data(), out.size());
}

inline void power_weight(std::span<const double> s, std::span<double> out,
                         const PowerWeightParams& prm) {
  active().power_weight(s.data(), out.data(), out.size(), prm);
}

inline double weighted_power_sum(std::span<const double> s, std::span<const double> w,
                                 double e) {
  return active().weighted_power_sum(s.data(), w.data(), s.size(), e);
}

inline void pow_batch(std::span<const double> x, double e, std::span<double> out) {
  active().pow_batch(x.data(), e, out.data(), out.size());
}

namespace detail {
extern const KernelTable scalar_table;
#if defined(SHEARLAB_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace shearlab::kernels
