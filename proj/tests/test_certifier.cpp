#include <gtest/gtest.h>

#include <cmath>

#include "shearlab/certifier.hpp"

using namespace shearlab;

TEST(Exponent, ComputeS) {
  EXPECT_DOUBLE_EQ(compute_s(1.8, 2), 1.8);
  // p = 1.2: p* = 3, (3/2)' = 3
  EXPECT_NEAR(compute_s(1.2, 2), 3.0, 1e-14);
  // d = 3, p = 1.5: p* = 3, (3/2)' = 3
  EXPECT_NEAR(compute_s(1.5, 3), 3.0, 1e-14);
  EXPECT_THROW(compute_s(1.0, 2), std::invalid_argument);
  EXPECT_THROW(compute_s(1.1, 3), std::invalid_argument);
  EXPECT_THROW(compute_s(1.5, 4), std::invalid_argument);
}

TEST(Exponent, BranchFormAgrees) {
  for (int d : {2, 3})
    for (double p = 2.0 * d / (d + 2.0) + 0.01; p < 2.0; p += 0.01)
      EXPECT_NEAR(compute_s_branch(p, d), compute_s(p, d), 1e-12) << p << " d=" << d;
}

TEST(Constants, Formula) {
  LiftNorms n;
  n.w1s = 2.0;
  n.sym_s = 0.5;
  n.div_s = 0.2;
  n.shifted_p = 4.0;
  const GConstants g = compute_constants(1.3, 1.6, 1.1, 1.5, n, 0.7, 1.8);
  EXPECT_DOUBLE_EQ(g.g1, 1.6 / 1.8);
  EXPECT_DOUBLE_EQ(g.g2, 1.1 * 2.25 * (0.5 + 0.1));
  EXPECT_NEAR(g.g3, 2.9 * std::pow(4.0, 0.8) + 1.1 * 4.0 + 1.1 * 1.5 * 0.2 * 2.0 + 1.5 * 0.7, 1e-13);
}

TEST(Constants, MissingProvenance) {
  CertifierInputs in;
  in.p = 1.8;
  EXPECT_THROW(compute_constants(in), MissingProvenance);
  in.chars = Characteristics{};
  in.chars->c3 = 1.6;
  EXPECT_THROW(compute_constants(in), MissingProvenance);
}

TEST(Smallness, ZeroDataSatisfiedWithZeroRadius) {
  const CoercivityReport r = check_smallness({0.9, 0.0, 0.0}, 1.8);
  EXPECT_TRUE(r.satisfied);
  ASSERT_TRUE(r.radius.has_value());
  EXPECT_EQ(*r.radius, 0.0);
}

TEST(Smallness, BoundaryOfTheCondition) {
  const double p = 1.5, g1 = 1.0, g2 = 1.0;
  // G2^(1/2) G3^(1/2) = lhs at G3 = lhs^2
  const double lhs = check_smallness({g1, 0.0, 0.0}, p).lhs;
  EXPECT_NEAR(lhs, 0.5, 1e-15);
  EXPECT_TRUE(check_smallness({g1, g2, lhs * lhs * (1 - 1e-12)}, p).satisfied);
  EXPECT_FALSE(check_smallness({g1, g2, lhs * lhs * (1 + 1e-12)}, p).satisfied);
  const CoercivityReport r = check_smallness({g1, g2, lhs * lhs}, p);
  EXPECT_EQ(r.satisfied, r.lhs >= r.rhs);
}

TEST(Smallness, RejectsBadInput) {
  EXPECT_THROW(check_smallness({1.0, 1.0, 1.0}, 2.0), std::invalid_argument);
  EXPECT_THROW(check_smallness({0.0, 1.0, 1.0}, 1.5), std::invalid_argument);
}

TEST(Radius, FormulaConsistencyOnRandomInstances) {
  const RadiusCheck c = verify_radius_formula(1000, 11);
  EXPECT_EQ(c.instances, 1000u);
  EXPECT_TRUE(c.passed());
  EXPECT_LE(c.worst_rel, 1e-10);
}

TEST(Radius, PolynomialVanishesOnlyAtTie) {
  // at a tie the polynomial has a double root at R
  const double p = 1.5;
  const GConstants g{1.0, 1.0, 0.25};
  const double r = coercivity_radius(g, p);
  EXPECT_NEAR(polynomial_positivity_check(g, p, r), 0.0, 1e-14);
}

TEST(WeightProbe, OptimumAtPMinusOne) {
  for (double p : {1.2, 1.5, 1.8}) {
    const WeightProbe w = weight_probe(1.3, 0.7, p, 1e-3);
    EXPECT_NEAR(w.theta_best, p - 1.0, 1e-3 + 1e-12) << p;
    EXPECT_NEAR(w.g3_best, w.g3_sharp, 1e-9 * w.g3_sharp) << p;
  }
}

// Closed form vs bisection on the two split inequalities.
TEST(WeightProbe, ClosedFormMatchesBisection) {
  for (double th : {0.1, 0.3, 0.5, 0.8, 0.95}) {
    const double a = split_admissible_g3(1.1, 0.4, 1.6, th);
    const double b = split_admissible_g3_bisect(1.1, 0.4, 1.6, th);
    EXPECT_NEAR(a, b, 1e-10 * a) << th;
  }
}

TEST(WeightProbe, SplitEquivalentToSmallness) {
  const double p = 1.7, g1 = 1.0, g2 = 0.3;
  const double gmax = split_admissible_g3(g1, g2, p, p - 1.0);
  EXPECT_TRUE(check_smallness({g1, g2, gmax * (1 - 1e-9)}, p).satisfied);
  EXPECT_FALSE(check_smallness({g1, g2, gmax * (1 + 1e-9)}, p).satisfied);
}

TEST(Alternative, BoundIsNegativeForLargeQNorm) {
  const AlternativeBound b = alternative_bound_scan(1.0, 0.5, 1.0, 1.5, 3.0, {0.5, 1.0, 2.0});
  EXPECT_EQ(b.scan.size(), 15u);
  for (const auto& r : b.scan)
    if (r.k >= 100) EXPECT_LT(r.value, 0.0);
  EXPECT_THROW(alternative_bound_scan(-1.0, 0.5, 1.0, 1.5, 3.0, {1.0}), std::invalid_argument);
}

TEST(Sweep, SingleTransitionUnderScaling) {
  const auto s = DiscreteSpace::build({}, 8, 8);
  BoundaryData d;
  d.g2 = [](double x, double y) { return std::array<double, 2>{std::sin(M_PI * x) * std::cos(M_PI * y), -std::cos(M_PI * x) * std::sin(M_PI * y)}; };
  CertifierInputs base;
  Characteristics c;
  c.c2 = 1.2607;
  c.c3 = 1.6;
  base.chars = c;
  EmbeddingConstants e;
  e.korn_p = 1.45;
  e.sob_p_to_pstar = e.sob_s_to_2pprime = e.sob_s_to_2sprime = 1.0;
  base.embeddings = e;
  base.f_norm = 0.0;
  base.p = 1.8;
  base.s = 1.8;
  std::vector<double> lambdas;
  for (double l = 0.01; l < 100.0; l *= 2.0) lambdas.push_back(l);
  const auto rows = scaling_sweep(d, s, base, lambdas);
  EXPECT_EQ(count_transitions(rows), 1);
  EXPECT_TRUE(rows.front().satisfied);
  EXPECT_FALSE(rows.back().satisfied);
  const std::string csv = sweep_csv(rows);
  EXPECT_EQ(csv.rfind("lambda,G1,G2,G3,lhs,rhs,satisfied,R\n", 0), 0u);
}
