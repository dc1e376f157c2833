#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "shearlab/counterexample.hpp"

using namespace shearlab;

TEST(Family, RejectsBadParameters) {
  EXPECT_THROW(build_family(2, 1.5, 3.0), FamilyError);
  EXPECT_THROW(build_family(4, 1.5, 1.5), FamilyError);
  EXPECT_THROW(build_family(4, 2.0, 1.5), FamilyError);
  EXPECT_THROW(build_family(8, 1.5, 3.0), FamilyError);
}

// Self-similar hats: each level halves the support, so the ratio grows by the
// exact factor 2^(2/p - 2/q).
TEST(Family, RatioGrowsByScalingFactor) {
  const double p = 1.5, q = 3.0;
  const TwoNormFamily f = build_family(5, p, q);
  ASSERT_EQ(f.members.size(), 5u);
  const double factor = std::pow(2.0, 2.0 / p - 2.0 / q);
  for (std::size_t k = 0; k < f.members.size(); ++k) {
    EXPECT_NEAR(f.members[k].norm_p, 1.0, 1e-12);
    if (k > 0) EXPECT_NEAR(f.members[k].ratio / f.members[k - 1].ratio, factor, 1e-10) << k;
  }
  EXPECT_DOUBLE_EQ(f.min_ratio(), f.members.front().ratio);
  EXPECT_DOUBLE_EQ(f.max_ratio(), f.members.back().ratio);
}

TEST(Scalars, RootOfT) {
  EXPECT_NEAR(find_y_n(2.0, 2.0, 1.0, 3.0), 1.0, 1e-15);
  EXPECT_NEAR(find_y_n(8.0, 2.0, 1.0, 3.0), 2.0, 1e-15);
  for (double n : {1.0, 7.0, 300.0}) EXPECT_NEAR(t_n(find_y_n(n, 2.5, 0.7, 4.0), n, 2.5, 0.7, 4.0), 0.0, 1e-13);
  EXPECT_EQ(y_n_norm(2.0, 1.0, std::numeric_limits<double>::infinity(), 3.0), 2.0);
}

TEST(Construction, HitsSphereAndTarget) {
  const TwoNormFamily f = build_family(4, 1.5, 3.0);
  const double n = 400.0, R = 1.0;
  const auto [lo, hi] = y_range(f, n, R);
  ASSERT_LT(lo, hi);
  for (double t : {0.0, 0.3, 0.7, 1.0}) {
    const double y = lo + t * (hi - lo);
    const Construction c = construct_u_n(f, n, R, y);
    EXPECT_NEAR(c.sphere, R, 1e-10);
    EXPECT_NEAR(c.norm_q, y, 1e-9 * y);
  }
  EXPECT_THROW(construct_u_n(f, n, R, 2.0 * hi), RangeError);
}

TEST(Run, DefaultsGiveNegativeTail) {
  const CounterexampleRun run = run_counterexample(CounterexampleParams{});
  ASSERT_TRUE(run.n0.has_value());
  EXPECT_EQ(*run.n0, 9.0);
  EXPECT_TRUE(run.margin_increasing);
  for (const auto& r : run.rows) {
    EXPECT_NEAR(r.sphere, 1.0, 1e-8) << r.n;
    if (r.n >= *run.n0) EXPECT_LT(r.P_n, 0.0);
    if (r.branch == 2) EXPECT_TRUE(r.step2_bound_holds) << r.n;
  }
  const std::string csv = counterexample_csv(run);
  EXPECT_EQ(csv.rfind("n,y_n,P_n,margin,member_mix,branch,sphere,y_realized\n", 0), 0u);
}

TEST(Run, ValidatesParameters) {
  CounterexampleParams p;
  p.q = 1.8;
  EXPECT_THROW(p.resolved(), std::invalid_argument);
  p = {};
  p.c1 = 0.5;  // R^(q-1)/c1 = 2 > F1/2
  EXPECT_THROW(p.resolved(), std::invalid_argument);
  p = {};
  p.n_values = {0.5};
  EXPECT_THROW(p.resolved(), std::invalid_argument);
  p = {};
  p.levels = 2;
  EXPECT_THROW(run_counterexample(p), FamilyError);
}

TEST(Run, Deterministic) {
  CounterexampleParams p;
  p.n_values = {1, 10, 100, 1000};
  EXPECT_EQ(counterexample_csv(run_counterexample(p)), counterexample_csv(run_counterexample(p)));
}
