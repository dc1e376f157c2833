#include "shearlab/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace shearlab::kernels {
namespace {

double pow0(double x, double e) {
  if (x == 0.0) return e == 0.0 ? 1.0 : (e > 0.0 ? 0.0 : HUGE_VAL);
  return std::pow(x, e);
}

void sym_norm2(const double* xx, const double* xy, const double* yy, double* out,
               std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::sqrt(xx[i] * xx[i] + 2.0 * xy[i] * xy[i] + yy[i] * yy[i]);
}

void full_norm2(const double* a, const double* b, const double* c, const double* d,
                double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::sqrt(a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + d[i] * d[i]);
}

void power_weight(const double* s, double* out, std::size_t n, PowerWeightParams prm) {
  for (std::size_t i = 0; i < n; ++i) {
    const double base = std::max(prm.shift + s[i], prm.floor);
    out[i] = prm.mu0 + prm.mu * pow0(base, prm.exponent);
  }
}

double weighted_power_sum(const double* s, const double* w, std::size_t n, double e) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * pow0(s[i], e);
  return acc;
}

void pow_batch(const double* x, double e, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = pow0(x[i], e);
}

}  // namespace

namespace detail {
const KernelTable scalar_table{Isa::scalar,       &sym_norm2,           &full_norm2,
                               &power_weight,     &weighted_power_sum, &pow_batch};
}

}  // namespace shearlab::kernels
