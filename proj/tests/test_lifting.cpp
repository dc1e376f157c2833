#include <gtest/gtest.h>

#include <cmath>

#include "shearlab/lifting.hpp"

using namespace shearlab;

namespace {

BoundaryData poly_data() {
  BoundaryData d;
  d.g2 = [](double x, double y) { return std::array<double, 2>{x * x, -2.0 * x * y}; };
  return d;
}

}  // namespace

TEST(Compatibility, DetectsDefect) {
  const auto s = DiscreteSpace::build({}, 8, 8);
  BoundaryData d;
  d.g1 = [](double, double) { return 1.0; };
  EXPECT_NEAR(check_compatibility(d, *s), 1.0, 1e-14);
  try {
    lift(d, s, 1.8, 1.8);
    FAIL() << "expected IncompatibleData";
  } catch (const IncompatibleData& e) {
    EXPECT_NEAR(e.defect, 1.0, 1e-14);
  }
  d.g2 = [](double x, double y) { return std::array<double, 2>{x, 0.0 * y}; };
  EXPECT_NEAR(check_compatibility(d, *s), 0.0, 1e-14);
}

// The quadratic divergence-free field lies in the discrete space and must be reproduced.
TEST(Lift, ReproducesQuadraticField) {
  for (int n : {4, 8, 16}) {
    const auto s = DiscreteSpace::build({}, n, n);
    const LiftField l = lift(poly_data(), s, 1.8, 1.8);
    EXPECT_LT(l.divergence_defect, 1e-12);
    EXPECT_LT(error_L2(l.g, [](double x, double y) { return std::array<double, 2>{x * x, -2.0 * x * y}; }), 1e-13);
    EXPECT_LT(l.boundary_defect, 1e-13);
  }
}

TEST(Lift, DivergenceDataIsMet) {
  const auto s = DiscreteSpace::build({}, 8, 8);
  BoundaryData d;
  d.g1 = [](double, double) { return 2.0; };
  d.g2 = [](double x, double y) { return std::array<double, 2>{x, y}; };
  const LiftField l = lift(d, s, 1.5, 3.0);
  EXPECT_LT(l.divergence_defect, 1e-12);
  EXPECT_LT(error_L2(l.g, [](double x, double y) { return std::array<double, 2>{x, y}; }), 1e-13);
}

TEST(Lift, SmoothFieldConvergesAtThirdOrder) {
  BoundaryData d;
  d.g2 = [](double x, double y) {
    return std::array<double, 2>{std::exp(x) * std::sin(y), std::exp(x) * std::cos(y)};
  };
  const VectorFn exact = d.g2;
  double prev = 0.0, prev_b = 0.0;
  for (int n : {8, 16, 32}) {
    const auto s = DiscreteSpace::build({}, n, n);
    const LiftField l = lift(d, s, 1.8, 1.8);
    const double e = error_L2(l.g, exact);
    EXPECT_LT(l.divergence_defect, 1e-8);
    if (prev > 0.0) {
      EXPECT_LT(e, prev);
      EXPECT_GT(std::log2(prev / e), 2.5);
      EXPECT_LT(l.boundary_defect, prev_b);
    }
    prev = e;
    prev_b = l.boundary_defect;
  }
}

TEST(Lift, ZeroDataGivesZero) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  const LiftField l = lift(BoundaryData{}, s, 1.8, 1.8);
  EXPECT_EQ(l.g.coef.norm(), 0.0);
  EXPECT_EQ(l.norms.w1p, 0.0);
}

TEST(Lift, LinearInData) {
  const auto s = DiscreteSpace::build({}, 8, 8);
  BoundaryData d;
  d.g2 = [](double x, double y) { return std::array<double, 2>{std::sin(3 * x) * y, x * std::cos(y)}; };
  const double defect = check_compatibility(d, *s);
  d.g1 = [defect](double, double) { return -defect; };  // constant shift restores compatibility
  const LiftField a = lift(d, s, 1.8, 1.8);
  const LiftField b = lift(d.scaled(3.0), s, 1.8, 1.8);
  EXPECT_LT((b.g.coef - 3.0 * a.g.coef).norm(), 1e-12 * b.g.coef.norm());
}

TEST(Solenoidal, ProjectionIsDivergenceFree) {
  const auto s = DiscreteSpace::build({}, 8, 8);
  Field u = interpolate_velocity(s, [](double x, double y) {
    return std::array<double, 2>{x * (1 - x) * y * (1 - y), std::sin(M_PI * x) * std::sin(M_PI * y)};
  });
  const Field w = solenoidal_projection(s, {u}).front();
  EXPECT_LT((s->divergence() * w.coef).norm(), 1e-12);
  EXPECT_EQ(evaluate(w, 0.0, 0.3)[0], 0.0);
}

// Coarse witnesses are re-lifted as the first trials, so the fine estimate dominates
// them exactly; against the coarse estimate itself only up to discretization error.
TEST(Probe, RefinementKeepsCoarseWitnesses) {
  std::optional<OperatorNormProbe> prev;
  for (int n : {4, 8, 16}) {
    const auto s = DiscreteSpace::build({}, n, n);
    const OperatorNormProbe p = operator_norm_probe(s, 20, 1.8, 1, prev ? &*prev : nullptr);
    EXPECT_GT(p.c_lift_est, 0.0);
    EXPECT_GT(p.c_bog_est, 0.0);
    if (prev) {
      ASSERT_GE(p.trials.size(), 2u);
      EXPECT_GE(p.c_lift_est, p.trials[0].lift_ratio);
      EXPECT_GE(p.c_bog_est, p.trials[1].bog_ratio);
      EXPECT_GE(p.c_lift_est, prev->c_lift_est * 0.98);
      EXPECT_GE(p.c_bog_est, prev->c_bog_est * 0.98);
    }
    for (const auto& t : p.trials) {
      const double bound = p.c_lift_est * (1.0 + p.c_bog_est) * t.boundary_norm + p.c_bog_est * t.g1_norm;
      EXPECT_LE(t.g_norm, bound * (1.0 + 1e-10));
    }
    prev = p;
  }
}
