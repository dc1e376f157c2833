#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "shearlab/expression.hpp"
#include "shearlab/solver.hpp"

using namespace shearlab;

namespace {

// u = (d_y psi, -d_x psi) with psi = (x(1-x) y(1-y))^2 exp(x + 2y): divergence free,
// zero on the boundary and without mirror symmetry.
const Expression kPsi = Expression::parse("(x*(1-x)*y*(1-y))^2*exp(x+2*y)");

std::array<double, 2> stream_velocity(double x, double y) {
  const Dual d = kPsi.dual(x, y);
  return {d.dy, -d.dx};
}

std::array<double, 2> smooth_lift(double x, double y) {
  return {std::sin(M_PI * x) * std::cos(M_PI * y), -std::cos(M_PI * x) * std::sin(M_PI * y)};
}

ProblemInstance tangential_instance(int n, double p) {
  const auto s = DiscreteSpace::build({}, n, n);
  BoundaryData d;
  d.g2 = [](double x, double y) {
    auto v = smooth_lift(x, y);
    return std::array<double, 2>{0.1 * v[0], 0.1 * v[1]};
  };
  const LiftField l = lift(d, s, p, p);
  return ProblemInstance::make({p, 0.0, 0.0, 1.0}, l);
}

}  // namespace

TEST(SolverConfig, Defaults) {
  const auto sched = default_schedule();
  ASSERT_EQ(sched.size(), 7u);
  EXPECT_EQ(sched.front(), 10.0);
  EXPECT_EQ(sched.back(), 10.0 * 4096.0);
  const SolverConfig c = SolverConfig{}.resolved(1.8);
  EXPECT_EQ(c.q, 3.0);
  EXPECT_EQ(SolverConfig{}.resolved(3.0).q, 4.0);
  SolverConfig bad;
  bad.q = 2.0;
  EXPECT_THROW(bad.resolved(1.8), std::invalid_argument);
  bad.q = 0.0;
  bad.n_schedule = {100.0, 10.0};
  EXPECT_THROW(bad.resolved(1.8), std::invalid_argument);
}

TEST(Penalty, VanishesWithoutPenalty) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  const Field u = interpolate_velocity(s, stream_velocity);
  EXPECT_EQ(penalty_norm(u, 3.0, kNoPenalty), 0.0);
  EXPECT_EQ(residual_penalty(*s, u, 3.0, kNoPenalty).norm(), 0.0);
  // homogeneity: (1/n) ||Du||_q^(q-1) scaling in u
  const double a = penalty_norm(u, 3.0, 10.0), b = penalty_norm(2.0 * u, 3.0, 10.0);
  EXPECT_NEAR(b / a, 4.0, 1e-12);
  EXPECT_NEAR(penalty_norm(u, 3.0, 20.0), 0.5 * a, 1e-14 * a);
}

TEST(Operators, ResidualsMatchBilinearForms) {
  const ProblemInstance inst = tangential_instance(4, 1.7);
  const auto fields = random_test_fields(inst.space, 2, 3, false);
  const Eigen::VectorXd rs = residual_S(inst, fields[0]);
  const Eigen::VectorXd rt = residual_T(inst, fields[0]);
  EXPECT_NEAR(rs.dot(fields[1].coef), apply_S(inst, fields[0], fields[1]), 1e-10 * (1 + rs.norm()));
  EXPECT_NEAR(rt.dot(fields[1].coef), apply_T(inst, fields[0], fields[1]), 1e-10 * (1 + rt.norm()));
}

TEST(Solver, RefusesUncertifiedInstance) {
  const ProblemInstance inst = tangential_instance(4, 1.8);
  SolverConfig cfg;
  EXPECT_THROW(continuation_solve(inst, cfg), CertificationRequired);
  CoercivityReport bad;
  bad.satisfied = false;
  ProblemInstance with_bad = ProblemInstance::make(inst.model, inst.lift, {}, bad);
  EXPECT_THROW(continuation_solve(with_bad, cfg), CertificationRequired);
}

TEST(Solver, ZeroDataGivesZeroSolution) {
  const auto s = DiscreteSpace::build({}, 4, 4);
  const LiftField l = lift(BoundaryData{}, s, 1.8, 1.8);
  const ProblemInstance inst = ProblemInstance::make({1.8, 0.1, 0.0, 1.0}, l);
  SolverConfig cfg;
  cfg.override_certification = true;
  cfg.n_schedule = {10.0, kNoPenalty};
  const SolveResult r = continuation_solve(inst, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.u.coef.norm(), 1e-12);
}

TEST(Solver, PenaltyLevelsRespectEnvelope) {
  ProblemInstance inst = tangential_instance(8, 1.8);
  CoercivityReport rep;
  rep.satisfied = true;
  rep.radius = 5.0;
  inst.report = rep;
  SolverConfig cfg;
  cfg.n_schedule = {10.0, 40.0, 160.0};
  const SolveResult r = continuation_solve(inst, cfg);
  ASSERT_TRUE(r.converged) << r.message;
  ASSERT_EQ(r.levels.size(), 3u);
  for (const auto& lv : r.levels) {
    EXPECT_TRUE(lv.converged);
    EXPECT_LE(lv.norm_Du_p, 5.0 * 1.05);
    EXPECT_LE(lv.penalty_norm, lv.penalty_envelope * 1.05);
  }
  EXPECT_GT(r.levels[0].penalty_norm, r.levels[2].penalty_norm);
}

// p = 1.8 and the Newtonian case: error decreases with slope about 3 in L2.
TEST(Solver, ManufacturedConvergence) {
  const Expression v0 = Expression::parse("0.5*sin(pi*x)*cos(pi*y)");
  const Expression v1 = Expression::parse("-0.5*cos(pi*x)*sin(pi*y)");
  const Expression pe = Expression::parse("x-0.5");
  const VectorFn exact = [&](double x, double y) { return std::array<double, 2>{v0(x, y), v1(x, y)}; };
  for (double p : {1.8, 2.0}) {
    const PDeltaModel model{p, 0.0, 0.0, 1.0};
    double prev = 0.0;
    std::vector<double> errs;
    for (int n : {4, 8, 16}) {
      const auto s = DiscreteSpace::build({}, n, n);
      BoundaryData bd;
      bd.g2 = exact;
      const LiftField l = lift(bd, s, p, 2.0);
      ProblemInstance inst = ProblemInstance::make(model, l, manufactured_load(*s, model, v0, v1, pe, true));
      SolverConfig cfg;
      cfg.override_certification = true;
      cfg.n_schedule = {kNoPenalty};
      const SolveResult r = continuation_solve(inst, cfg);
      ASSERT_TRUE(r.converged) << "p=" << p << " n=" << n << " " << r.message;
      errs.push_back(error_L2(r.v, exact));
      if (prev > 0.0) {
        EXPECT_LT(errs.back(), prev);
      }
      prev = errs.back();
    }
    EXPECT_GE(std::log2(errs[1] / errs[2]), 1.5) << p;
  }
}

// Defects of the convective identities for a smooth solenoidal u and a smooth lift.
TEST(Convective, IdentityDefectsDecreaseUnderRefinement) {
  std::vector<ConvectiveDefects> d;
  for (int n : {8, 16, 32}) {
    SpaceOptions o;
    o.check_inf_sup = false;
    const auto s = DiscreteSpace::build({}, n, n, o);
    const Field u = interpolate_velocity(s, stream_velocity);
    const Field g = interpolate_velocity(s, [](double x, double y) {
      return std::array<double, 2>{std::exp(x) * std::sin(y), std::exp(x) * std::cos(y)};
    });
    d.push_back(convective_identity_diagnostics(*s, eval_velocity_qp(u), eval_velocity_qp(g)));
  }
  for (std::size_t k = 1; k < d.size(); ++k) {
    EXPECT_LE(d[k].e1, 0.5 * d[k - 1].e1) << k;
    EXPECT_LE(d[k].e2, 0.5 * d[k - 1].e2) << k;
    EXPECT_LE(d[k].e4, 0.5 * d[k - 1].e4) << k;
    // exact for piecewise quadratics at this quadrature order
    EXPECT_LE(d[k].e3, 1e-13);
  }
}

TEST(Lemmas, LowerBoundOnS) {
  for (double p : {1.2, 1.5, 1.8}) {
    const ProblemInstance inst = tangential_instance(4, p);
    const Characteristics c = estimate_characteristics(inst.model, 20000, 9);
    const LemmaCheck chk = verify_S_lower_bound(inst, c, random_test_fields(inst.space, 20, 2, false));
    EXPECT_EQ(chk.checked, 20u);
    EXPECT_TRUE(chk.passed()) << p << " worst " << chk.worst;
  }
}

TEST(Lemmas, ConvectiveBound) {
  const ProblemInstance inst = tangential_instance(4, 1.8);
  const LemmaCheck chk = verify_convective_bound(inst, 1.0, 1.5, random_test_fields(inst.space, 20, 4, false));
  EXPECT_EQ(chk.checked, 20u);
  EXPECT_TRUE(chk.passed()) << chk.worst;
}

TEST(Pressure, RecoveryOfManufacturedPressure) {
  const Expression v0 = Expression::parse("0.5*sin(pi*x)*cos(pi*y)");
  const Expression v1 = Expression::parse("-0.5*cos(pi*x)*sin(pi*y)");
  const Expression pe = Expression::parse("x-0.5");
  const auto s = DiscreteSpace::build({}, 8, 8);
  const PDeltaModel model{2.0, 0.0, 0.0, 1.0};
  BoundaryData bd;
  bd.g2 = [&](double x, double y) { return std::array<double, 2>{v0(x, y), v1(x, y)}; };
  const LiftField l = lift(bd, s, 2.0, 2.0);
  const ProblemInstance inst = ProblemInstance::make(model, l, manufactured_load(*s, model, v0, v1, pe, true));
  SolverConfig cfg;
  cfg.override_certification = true;
  cfg.n_schedule = {kNoPenalty};
  const SolveResult r = continuation_solve(inst, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(error_L2(r.pi, [&](double x, double y) { return pe(x, y); }), 5e-2);
}
