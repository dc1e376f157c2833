// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and is
// only entered after runtime CPU detection.

#include "shearlab/kernels/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace shearlab::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

// exp on [-708, 709.7]; 0 below, +inf above. Taylor series of degree 13 on the
// reduced argument |r| <= ln2/2, which is below 1 ulp.
inline __m256d exp_pd(__m256d x) {
  const __m256d log2e = set1(1.4426950408889634074);
  const __m256d ln2_hi = set1(6.93147180369123816490e-01);
  const __m256d ln2_lo = set1(1.90821492927058770002e-10);

  const __m256d too_small = _mm256_cmp_pd(x, set1(-708.0), _CMP_LT_OQ);
  const __m256d too_large = _mm256_cmp_pd(x, set1(709.7), _CMP_GT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, set1(-708.0)), set1(709.7));

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  // 1/k! for k = 13 .. 0
  static constexpr double c[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
      1.0,                1.0};
  __m256d poly = set1(c[0]);
  for (int k = 1; k < 14; ++k) poly = _mm256_fmadd_pd(poly, r, set1(c[k]));

  // 2^n through the exponent field
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  n64 = _mm256_slli_epi64(n64, 52);
  __m256d result = _mm256_mul_pd(poly, _mm256_castsi256_pd(n64));

  result = _mm256_blendv_pd(result, _mm256_setzero_pd(), too_small);
  result = _mm256_blendv_pd(result, set1(HUGE_VAL), too_large);
  return result;
}

// log for positive normal doubles, via log(m) = 2 atanh((m-1)/(m+1)) with
// m in [sqrt(1/2), sqrt(2)).
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);

  __m256i e_int = _mm256_srli_epi64(bits, 52);
  e_int = _mm256_sub_epi64(e_int, _mm256_set1_epi64x(1023));
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  // int64 -> double for |e| < 2^31: pack low halves then convert
  alignas(32) std::int64_t e_lanes[kLanes];
  _mm256_store_si256(reinterpret_cast<__m256i*>(e_lanes), e_int);
  __m256d e = _mm256_set_pd(static_cast<double>(e_lanes[3]), static_cast<double>(e_lanes[2]),
                            static_cast<double>(e_lanes[1]), static_cast<double>(e_lanes[0]));

  const __m256d big = _mm256_cmp_pd(m, set1(1.41421356237309504880), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, set1(1.0)));

  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, set1(1.0)), _mm256_add_pd(m, set1(1.0)));
  const __m256d s2 = _mm256_mul_pd(s, s);
  // sum_{k=0}^{11} s2^k / (2k+1)
  __m256d poly = set1(1.0 / 23.0);
  for (int k = 10; k >= 0; --k) poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / (2.0 * k + 1.0)));
  const __m256d log_m = _mm256_mul_pd(_mm256_add_pd(s, s), poly);

  const __m256d ln2_hi = set1(6.93147180369123816490e-01);
  const __m256d ln2_lo = set1(1.90821492927058770002e-10);
  return _mm256_fmadd_pd(e, ln2_hi, _mm256_fmadd_pd(e, ln2_lo, log_m));
}

// x^e for x >= 0 with the pow(0, e>0) = 0, pow(0, 0) = 1 conventions.
inline __m256d pow_pd(__m256d x, double e) {
  if (e == 0.0) return set1(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d is_zero = _mm256_cmp_pd(x, zero, _CMP_EQ_OQ);
  const __m256d safe = _mm256_blendv_pd(x, set1(1.0), is_zero);
  __m256d r = exp_pd(_mm256_mul_pd(set1(e), log_pd(safe)));
  return _mm256_blendv_pd(r, e > 0.0 ? zero : set1(HUGE_VAL), is_zero);
}

double pow_scalar(double x, double e) {
  if (x == 0.0) return e == 0.0 ? 1.0 : (e > 0.0 ? 0.0 : HUGE_VAL);
  return std::pow(x, e);
}

void sym_norm2(const double* xx, const double* xy, const double* yy, double* out,
               std::size_t n) {
  std::size_t i = 0;
  const __m256d two = set1(2.0);
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d a = _mm256_loadu_pd(xx + i);
    const __m256d b = _mm256_loadu_pd(xy + i);
    const __m256d c = _mm256_loadu_pd(yy + i);
    __m256d acc = _mm256_mul_pd(a, a);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(two, b), b, acc);
    acc = _mm256_fmadd_pd(c, c, acc);
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(acc));
  }
  for (; i < n; ++i) out[i] = std::sqrt(xx[i] * xx[i] + 2.0 * xy[i] * xy[i] + yy[i] * yy[i]);
}

void full_norm2(const double* a, const double* b, const double* c, const double* d,
                double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    const __m256d vc = _mm256_loadu_pd(c + i);
    const __m256d vd = _mm256_loadu_pd(d + i);
    __m256d acc = _mm256_mul_pd(va, va);
    acc = _mm256_fmadd_pd(vb, vb, acc);
    acc = _mm256_fmadd_pd(vc, vc, acc);
    acc = _mm256_fmadd_pd(vd, vd, acc);
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(acc));
  }
  for (; i < n; ++i) out[i] = std::sqrt(a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + d[i] * d[i]);
}

void power_weight(const double* s, double* out, std::size_t n, PowerWeightParams prm) {
  std::size_t i = 0;
  const __m256d shift = set1(prm.shift);
  const __m256d floor = set1(prm.floor);
  const __m256d mu0 = set1(prm.mu0);
  const __m256d mu = set1(prm.mu);
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d base = _mm256_max_pd(_mm256_add_pd(shift, _mm256_loadu_pd(s + i)), floor);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(mu, pow_pd(base, prm.exponent), mu0));
  }
  for (; i < n; ++i)
    out[i] = prm.mu0 + prm.mu * pow_scalar(std::max(prm.shift + s[i], prm.floor), prm.exponent);
}

double weighted_power_sum(const double* s, const double* w, std::size_t n, double e) {
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + kLanes <= n; i += kLanes)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), pow_pd(_mm256_loadu_pd(s + i), e), acc);
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) total += w[i] * pow_scalar(s[i], e);
  return total;
}

void pow_batch(const double* x, double e, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) _mm256_storeu_pd(out + i, pow_pd(_mm256_loadu_pd(x + i), e));
  for (; i < n; ++i) out[i] = pow_scalar(x[i], e);
}

}  // namespace

namespace detail {
const KernelTable avx2_table{Isa::avx2,    &sym_norm2,          &full_norm2,
                             &power_weight, &weighted_power_sum, &pow_batch};
}

}  // namespace shearlab::kernels
