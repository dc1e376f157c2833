#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "shearlab/discretization.hpp"

using namespace shearlab;

TEST(Space, Counts) {
  const auto s = DiscreteSpace::build({}, 4, 6);
  EXPECT_EQ(s->num_elements(), 48);
  EXPECT_EQ(s->num_p1(), 35);
  EXPECT_EQ(s->num_p2(), 9 * 13);
  EXPECT_EQ(s->num_free(), 2 * 7 * 11);
}

TEST(Space, RejectsBadInput) {
  EXPECT_THROW(DiscreteSpace::build({}, 1, 4), std::invalid_argument);
  EXPECT_THROW(DiscreteSpace::build({1.0, 0.0, 0.0, 1.0, 2}, 4, 4), std::invalid_argument);
}

TEST(Space, QuadratureIntegratesPolynomials) {
  const auto s = DiscreteSpace::build({0.0, 0.0, 2.0, 1.0, 2}, 4, 4);
  double area = 0.0, mom = 0.0;
  for (int q = 0; q < s->num_qp(); ++q) {
    area += s->qp_w()[q];
    mom += s->qp_w()[q] * std::pow(s->qp_x()[q], 3) * std::pow(s->qp_y()[q], 3);
  }
  EXPECT_NEAR(area, 2.0, 1e-14);
  EXPECT_NEAR(mom, 4.0 * 0.25, 1e-13);
}

// Discrete inf-sup constants of the criss-cross Taylor-Hood pair stay bounded away from 0.
TEST(Space, InfSupBoundedBelow) {
  double prev = 0.0;
  for (int n : {4, 8, 16}) {
    const auto s = DiscreteSpace::build({}, n, n);
    EXPECT_GT(s->inf_sup(), 0.4) << n;
    EXPECT_LT(s->inf_sup(), 1.0) << n;
    if (prev > 0.0) EXPECT_NEAR(s->inf_sup(), prev, 0.05);
    prev = s->inf_sup();
  }
}

TEST(Field, InterpolationIsExactForQuadratics) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  const VectorFn fn = [](double x, double y) { return std::array<double, 2>{x * x, -2.0 * x * y}; };
  const Field u = interpolate_velocity(s, fn);
  EXPECT_LT(error_L2(u, fn), 1e-14);
  const auto v = evaluate(u, 0.37, 0.81);
  EXPECT_NEAR(v[0], 0.37 * 0.37, 1e-14);
  EXPECT_NEAR(v[1], -2.0 * 0.37 * 0.81, 1e-14);
  // ||D(x^2, -2xy)||_2^2 = int 4x^2 + 2 y^2 + 4 x^2 y^2... computed by hand: D = [[2x, -y], [-y, -2x]]
  EXPECT_NEAR(std::pow(norm_sym_grad_p(u, 2.0), 2.0), 8.0 / 3.0 + 2.0 / 3.0, 1e-13);
  EXPECT_NEAR(norm_div_p(u, 2.0), 0.0, 1e-14);
}

TEST(Field, NormsOfLinearFields) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  const Field f = interpolate_scalar(s, [](double x, double) { return x; });
  EXPECT_NEAR(norm_Lp(f, 2.0), 1.0 / std::sqrt(3.0), 1e-14);
  const Field rot = interpolate_velocity(s, [](double x, double y) { return std::array<double, 2>{y, -x}; });
  EXPECT_NEAR(norm_sym_grad_p(rot, 1.5), 0.0, 1e-14);
  EXPECT_NEAR(norm_grad_p(rot, 2.0), std::sqrt(2.0), 1e-14);
}

TEST(Field, ProlongationIsExactOnNestedMeshes) {
  const auto c = DiscreteSpace::build({}, 4, 4);
  const auto f = c->refined();
  const VectorFn fn = [](double x, double y) { return std::array<double, 2>{std::sin(3 * x) * y, x - y * y}; };
  const Field u = interpolate_velocity(c, fn);
  const Field v = prolongate(u, f);
  for (double x : {0.11, 0.5, 0.93})
    for (double y : {0.07, 0.62}) {
      const auto a = evaluate(u, x, y), b = evaluate(v, x, y);
      EXPECT_NEAR(a[0], b[0], 1e-13);
      EXPECT_NEAR(a[1], b[1], 1e-13);
    }
}

TEST(Field, MeanRemoval) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  Field p = interpolate_scalar(s, [](double x, double y) { return 1.0 + x * y; }, Role::pressure);
  remove_mean(p);
  EXPECT_NEAR(mean(p), 0.0, 1e-15);
}

TEST(Field, WriteReadRoundTrip) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  const Field u = interpolate_velocity(s, [](double x, double y) { return std::array<double, 2>{std::exp(x), y / 3.0}; });
  const auto path = (std::filesystem::temp_directory_path() / "shearlab_field_rt.txt").string();
  write_field(u, path, "u");
  const Field r = read_field(s, path);
  EXPECT_EQ(r.role, Role::velocity);
  ASSERT_EQ(r.coef.size(), u.coef.size());
  for (Eigen::Index k = 0; k < u.coef.size(); ++k) EXPECT_EQ(r.coef[k], u.coef[k]);
  std::filesystem::remove(path);
}

TEST(Field, BoundaryHelpers) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  Field u = interpolate_velocity(s, [](double x, double y) { return std::array<double, 2>{1.0 + x, y}; });
  zero_boundary(u);
  EXPECT_EQ(evaluate(u, 0.0, 0.5)[0], 0.0);
  const Field w = extend_free(s, restrict_free(u));
  EXPECT_EQ((w.coef - u.coef).norm(), 0.0);
}
