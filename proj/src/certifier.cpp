#include "shearlab/certifier.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "shearlab/random.hpp"

namespace shearlab {

namespace {

void check_dim_range(double p, int d) {
  if (d != 2 && d != 3) throw std::invalid_argument("compute_s: d must be 2 or 3");
  const double lo = 2.0 * d / (d + 2.0);
  if (!(p > lo && p < 2.0))
    throw std::invalid_argument("compute_s: p must lie in (2d/(d+2), 2)");
}

double conjugate(double r) { return r / (r - 1.0); }

double half_critical_conjugate(double p, int d) {
  const double pstar = p * d / (d - p);
  return conjugate(pstar / 2.0);
}

}  // namespace

double compute_s(double p, int d) {
  check_dim_range(p, d);
  return std::max(p, half_critical_conjugate(p, d));
}

double compute_s_branch(double p, int d) {
  check_dim_range(p, d);
  return p > 3.0 * d / (d + 2.0) ? p : half_critical_conjugate(p, d);
}

GConstants compute_constants(double c2, double c3, double c_sob, double c_korn,
                             const LiftNorms& l, double f_norm, double p) {
  GConstants g;
  g.g1 = c3 / p;
  g.g2 = c_sob * c_korn * c_korn * (l.sym_s + 0.5 * l.div_s);
  g.g3 = (c2 + c3) * std::pow(l.shifted_p, p - 1.0) + c_sob * l.w1s * l.w1s +
         c_sob * c_korn * l.div_s * l.w1s + c_korn * f_norm;
  return g;
}

GConstants compute_constants(const CertifierInputs& in) {
  if (!in.chars) throw MissingProvenance("compute_constants: characteristics not estimated");
  if (!in.embeddings) throw MissingProvenance("compute_constants: embedding constants missing");
  if (!in.lift) throw MissingProvenance("compute_constants: lift norms missing");
  if (!in.f_norm) throw MissingProvenance("compute_constants: load dual norm missing");
  if (!(in.chars->c3 > 0.0)) throw MissingProvenance("compute_constants: C3 must be positive");
  return compute_constants(in.chars->c2, in.chars->c3, in.embeddings->c_sob(),
                           in.embeddings->c_korn(), *in.lift, *in.f_norm, in.p);
}

double coercivity_radius(const GConstants& g, double p) {
  if (g.g3 <= 0.0) return 0.0;
  return std::pow(g.g3 / ((2.0 - p) * g.g1), 1.0 / (p - 1.0));
}

CoercivityReport check_smallness(const GConstants& g, double p) {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("check_smallness: p must lie in (1, 2)");
  if (!(g.g1 > 0.0) || g.g2 < 0.0 || g.g3 < 0.0)
    throw std::invalid_argument("check_smallness: need G1 > 0 and G2, G3 >= 0");
  CoercivityReport r;
  r.p = p;
  r.g1 = g.g1;
  r.g2 = g.g2;
  r.g3 = g.g3;
  r.lhs = std::pow(2.0 - p, 2.0 - p) * std::pow(p - 1.0, p - 1.0) * g.g1;
  r.rhs = std::pow(g.g2, p - 1.0) * std::pow(g.g3, 2.0 - p);
  r.satisfied = r.lhs >= r.rhs;
  if (r.satisfied) r.radius = coercivity_radius(g, p);
  return r;
}

double polynomial_positivity_check(const GConstants& g, double p, double radius) {
  return g.g1 * std::pow(radius, p) - g.g2 * radius * radius - g.g3 * radius;
}

double split_admissible_g3(double g1, double g2, double p, double theta) {
  if (g2 <= 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - theta) * g1 * std::pow(theta * g1 / g2, (p - 1.0) / (2.0 - p));
}

double split_admissible_g3_bisect(double g1, double g2, double p, double theta) {
  // The (1 - theta) part fixes R; the theta part must then dominate G2 R^2.
  auto closes = [&](double g3) {
    const double r = std::pow(g3 / ((1.0 - theta) * g1), 1.0 / (p - 1.0));
    return theta * g1 * std::pow(r, p) >= g2 * r * r;
  };
  if (g2 <= 0.0) return std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = 1.0;
  while (closes(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  while (!closes(lo) && lo > 0.0) lo *= 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (closes(mid) ? lo : hi) = mid;
  }
  return lo;
}

RadiusCheck verify_radius_formula(std::size_t instances, std::uint64_t seed, double rel_tol) {
  Rng rng(seed);
  RadiusCheck c;
  auto log_uniform = [&](double lo, double hi) {
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
  };
  while (c.instances < instances) {
    if (++c.drawn > 1000 * (instances + 1)) break;
    const double p = rng.uniform(1.05, 1.95);
    GConstants g{log_uniform(0.1, 10.0), log_uniform(1e-3, 10.0), log_uniform(1e-4, 10.0)};
    const CoercivityReport r = check_smallness(g, p);
    if (!r.satisfied) continue;
    ++c.instances;
    const double back = (2.0 - p) * g.g1 * std::pow(*r.radius, p - 1.0);
    const double rel = std::abs(back - g.g3) / g.g3;
    const double lead = g.g1 * std::pow(*r.radius, p);
    const double poly = polynomial_positivity_check(g, p, *r.radius) / lead;
    c.worst_rel = std::max(c.worst_rel, rel);
    c.worst_poly = std::min(c.worst_poly, poly);
    if (rel > rel_tol || poly < -rel_tol) ++c.failures;
  }
  if (c.instances < instances) ++c.failures;
  return c;
}

WeightProbe weight_probe(double g1, double g2, double p, double step) {
  WeightProbe w;
  const int n = static_cast<int>(std::floor(1.0 / step + 0.5));
  w.g3_best = -1.0;
  for (int k = 1; k < n; ++k) {
    const double th = k * step;
    const double v = split_admissible_g3(g1, g2, p, th);
    w.theta.push_back(th);
    w.g3_max.push_back(v);
    if (v > w.g3_best) {
      w.g3_best = v;
      w.theta_best = th;
    }
  }
  // sup_R G1 R^(p-1) - G2 R, attained at R* = ((p-1) G1 / G2)^(1/(2-p))
  if (g2 > 0.0) {
    const double rs = std::pow((p - 1.0) * g1 / g2, 1.0 / (2.0 - p));
    w.g3_sharp = g1 * std::pow(rs, p - 1.0) - g2 * rs;
  } else {
    w.g3_sharp = std::numeric_limits<double>::infinity();
  }
  return w;
}

double alternative_bound(double f1, double f2, double g1, double p, double a, double b) {
  return g1 * std::pow(a, p) - f1 * b - f2 * a * b;
}

AlternativeBound alternative_bound_scan(double f1, double f2, double g1, double p, double q,
                                        const std::vector<double>& radii,
                                        const std::vector<double>& k_grid) {
  if (f1 < 0.0 || f2 < 0.0 || !(g1 > 0.0))
    throw std::invalid_argument("alternative_bound_scan: need F1, F2 >= 0 and G1 > 0");
  AlternativeBound out{f1, f2, g1, p, q, {}};
  for (double r : radii)
    for (double k : k_grid) {
      AlternativeRow row;
      row.radius = r;
      row.k = k;
      row.y = k * r;
      row.value = alternative_bound(f1, f2, g1, p, r, row.y);
      out.scan.push_back(row);
    }
  return out;
}

AlternativeConstants alternative_constants(double c2, double c3, double c_sob, double c_korn,
                                           double g_w1p, double sym_p, double div_p,
                                           double shifted_p, double f_norm, double p,
                                           double q, double area) {
  AlternativeConstants a;
  const double holder = std::pow(area, 1.0 / p - 1.0 / q);
  a.f2 = c_sob * c_korn * c_korn * (sym_p + 0.5 * div_p);
  a.f1 = c_sob * (g_w1p * g_w1p + c_korn * div_p * g_w1p) +
         holder * ((c2 + c3) * std::pow(shifted_p, p - 1.0) + c_korn * f_norm);
  return a;
}

std::vector<SweepRow> scaling_sweep(const BoundaryData& data, const SpacePtr& space,
                                    const CertifierInputs& base,
                                    const std::vector<double>& lambdas) {
  std::vector<BoundaryData> scaled;
  for (double lam : lambdas) scaled.push_back(data.scaled(lam));
  const std::vector<LiftField> lifts = lift(scaled, space, base.p, base.s, base.delta);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double lam = lambdas[i];
    CertifierInputs in = base;
    in.lift = lifts[i].norms;
    SweepRow row;
    row.lambda = lam;
    row.g = compute_constants(in);
    const CoercivityReport r = check_smallness(row.g, in.p);
    row.lhs = r.lhs;
    row.rhs = r.rhs;
    row.satisfied = r.satisfied;
    row.radius = r.radius.value_or(std::numeric_limits<double>::quiet_NaN());
    rows.push_back(row);
  }
  return rows;
}

int count_transitions(const std::vector<SweepRow>& rows) {
  int n = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i - 1].satisfied && !rows[i].satisfied) ++n;
  return n;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "lambda,G1,G2,G3,lhs,rhs,satisfied,R\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,", r.lambda, r.g.g1,
                  r.g.g2, r.g.g3, r.lhs, r.rhs, r.satisfied ? 1 : 0);
    os << buf;
    if (r.satisfied) {
      std::snprintf(buf, sizeof buf, "%.17g", r.radius);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

Eigen::VectorXd load_vector(const DiscreteSpace& space, const VectorFn& f) {
  VelocityQp c;
  c.resize(space.num_qp());
  for (int q = 0; q < space.num_qp(); ++q) {
    const auto v = f(space.qp_x()[q], space.qp_y()[q]);
    c.u0[q] = v[0];
    c.u1[q] = v[1];
  }
  return assemble_velocity_functional(space, c);
}

}  // namespace shearlab
