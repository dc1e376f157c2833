#include <gtest/gtest.h>

#include <cmath>

#include "shearlab/embedding.hpp"
#include "shearlab/random.hpp"

using namespace shearlab;

TEST(Embedding, CriticalExponent) {
  EXPECT_DOUBLE_EQ(critical_exponent(1.5, 2), 6.0);
  EXPECT_DOUBLE_EQ(critical_exponent(1.5, 3), 3.0);
  EXPECT_TRUE(std::isinf(critical_exponent(2.0, 2)));
}

// On zero-boundary fields int |grad u|^2 = 2 int |Du|^2 - int (div u)^2.
TEST(Embedding, KornIdentityAtP2) {
  const auto s = DiscreteSpace::build({}, 8, 8);
  Rng rng(4);
  for (int t = 0; t < 5; ++t) {
    Field u = Field::zeros(s, Role::velocity);
    for (int d : s->free_dofs()) u.coef[d] = rng.uniform(-1.0, 1.0);
    const double g = std::pow(norm_grad_p(u, 2.0), 2.0);
    const double d = std::pow(norm_sym_grad_p(u, 2.0), 2.0);
    const double v = std::pow(norm_div_p(u, 2.0), 2.0);
    EXPECT_NEAR(g, 2.0 * d - v, 1e-10 * g);
  }
  const RatioEstimate k = estimate_korn(s, 2.0);
  EXPECT_LE(k.value, std::sqrt(2.0) + 1e-6);
  EXPECT_GT(k.value, 1.0);
}

TEST(Embedding, KornAtLowerPExceedsOne) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  AscentOptions o;
  o.iters = 60;
  const RatioEstimate k = estimate_korn(s, 1.5, o);
  EXPECT_GT(k.value, 1.0);
  EXPECT_LT(k.value, 3.0);
  EXPECT_EQ(k.witness.space, s);
}

TEST(Embedding, SobolevRejectsSupercritical) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  EXPECT_THROW(estimate_sobolev(s, 1.5, 7.0), std::invalid_argument);
}

TEST(Embedding, SobolevDeterministicAndPositive) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  AscentOptions o;
  o.iters = 40;
  const RatioEstimate a = estimate_sobolev(s, 1.8, 4.0, o);
  const RatioEstimate b = estimate_sobolev(s, 1.8, 4.0, o);
  EXPECT_GT(a.value, 0.0);
  EXPECT_EQ(a.value, b.value);
}

TEST(Embedding, DualNormOfZeroLoadIsZero) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  AscentOptions o;
  o.iters = 20;
  EXPECT_EQ(dual_norm(s, Eigen::VectorXd::Zero(s->num_velocity()), 1.8, o).value, 0.0);
}

TEST(Embedding, ConstantsAreNormalized) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  AscentOptions o;
  o.iters = 30;
  const EmbeddingConstants e = estimate_embeddings(s, 1.8, 1.8, o);
  EXPECT_GE(e.c_korn(), 1.0);
  EXPECT_GE(e.c_sob(), 1.0);
  EXPECT_FALSE(e.rigorous);
  EXPECT_GE(e.c_sob(), e.sob_p_to_pstar * e.sob_p_to_pstar - 1e-15);
}
