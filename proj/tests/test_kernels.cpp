#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "shearlab/kernels/kernels.hpp"
#include "shearlab/random.hpp"

using namespace shearlab;
using namespace shearlab::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi, bool zeros) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = (zeros && i % 7 == 0) ? 0.0 : rng.uniform(lo, hi);
  return v;
}

double ulps(double a, double b) {
  if (a == b) return 0.0;
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) / (scale * 0x1.0p-52);
}

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(available(Isa::scalar));
  EXPECT_EQ(isa_name(table(Isa::scalar).isa), "scalar");
}

TEST(Kernels, ScalarReferenceValues) {
  const KernelTable& t = table(Isa::scalar);
  const double xx = 3.0, xy = 1.0, yy = -1.0;
  double out = 0.0;
  t.sym_norm2(&xx, &xy, &yy, &out, 1);
  EXPECT_NEAR(out, std::sqrt(9.0 + 2.0 + 1.0), 1e-15);
  const double s[3] = {0.0, 1.0, 4.0};
  const double w[3] = {1.0, 2.0, 0.5};
  EXPECT_NEAR(t.weighted_power_sum(s, w, 3, 1.5), 2.0 + 0.5 * 8.0, 1e-14);
  double pw[3];
  t.pow_batch(s, 0.5, pw, 3);
  EXPECT_EQ(pw[0], 0.0);
  EXPECT_NEAR(pw[2], 2.0, 1e-15);
  PowerWeightParams prm{0.5, 2.0, 1.0, -0.5, 0.0};
  t.power_weight(s, pw, 3, prm);
  EXPECT_NEAR(pw[0], 0.5 + 2.0, 1e-15);
  EXPECT_NEAR(pw[2], 0.5 + 2.0 / std::sqrt(5.0), 1e-15);
}

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {};

TEST_P(KernelEquivalence, Avx2MatchesScalar) {
  if (!available(Isa::avx2)) GTEST_SKIP() << "AVX2 not available on this CPU/build";
  const std::size_t n = GetParam();
  const KernelTable& s = table(Isa::scalar);
  const KernelTable& v = table(Isa::avx2);
  Rng rng(n + 17);
  const auto a = random_vec(rng, n, -10.0, 10.0, true);
  const auto b = random_vec(rng, n, -10.0, 10.0, false);
  const auto c = random_vec(rng, n, -1e-3, 1e-3, true);
  const auto d = random_vec(rng, n, -1e4, 1e4, false);
  const auto pos = random_vec(rng, n, 1e-8, 1e4, true);
  const auto w = random_vec(rng, n, 0.0, 1.0, false);
  std::vector<double> o1(n), o2(n);

  s.sym_norm2(a.data(), b.data(), c.data(), o1.data(), n);
  v.sym_norm2(a.data(), b.data(), c.data(), o2.data(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_LE(ulps(o1[i], o2[i]), 4.0) << i;

  s.full_norm2(a.data(), b.data(), c.data(), d.data(), o1.data(), n);
  v.full_norm2(a.data(), b.data(), c.data(), d.data(), o2.data(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_LE(ulps(o1[i], o2[i]), 4.0) << i;

  for (double e : {0.2, 0.5, 1.0, 1.8, 3.0}) {
    s.pow_batch(pos.data(), e, o1.data(), n);
    v.pow_batch(pos.data(), e, o2.data(), n);
    // exp(e log x): the rounding of e log x is amplified by |e log x|
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_LE(ulps(o1[i], o2[i]), 4.0 + 2.0 * std::abs(e * std::log(pos[i]))) << i << " e=" << e;
    const double r1 = s.weighted_power_sum(pos.data(), w.data(), n, e);
    const double r2 = v.weighted_power_sum(pos.data(), w.data(), n, e);
    EXPECT_NEAR(r1, r2, 1e-13 * std::abs(r1)) << e;
  }
  for (const PowerWeightParams prm : {PowerWeightParams{0.0, 1.0, 0.0, -0.2, 0.0},
                                      PowerWeightParams{0.3, 2.0, 0.1, -0.8, 1e-10},
                                      PowerWeightParams{0.0, 1.0, 1.0, 1.0, 0.0}}) {
    s.power_weight(pos.data(), o1.data(), n, prm);
    v.power_weight(pos.data(), o2.data(), n, prm);
    for (std::size_t i = 0; i < n; ++i) EXPECT_LE(ulps(o1[i], o2[i]), 8.0) << i;
  }
}

// Lengths around the vector width exercise the remainder loops.
INSTANTIATE_TEST_SUITE_P(Lengths, KernelEquivalence,
                         ::testing::Values(0, 1, 3, 4, 5, 7, 8, 9, 31, 1000, 4099));
