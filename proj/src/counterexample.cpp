#include "shearlab/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace shearlab {

namespace {

double penalty_exponent(double q) { return 2.0 / (2.0 * q - 1.0); }

struct PathPoint {
  Field w;
  double np, nq;
};

PathPoint path_point(const TwoNormFamily& f, int lo, int hi, double theta) {
  PathPoint pt{(1.0 - theta) * f.members[lo].u + theta * f.members[hi].u, 0.0, 0.0};
  pt.np = norm_sym_grad_p(pt.w, f.p);
  pt.nq = norm_sym_grad_p(pt.w, f.q);
  return pt;
}

}  // namespace

double TwoNormFamily::min_ratio() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& m : members) r = std::min(r, m.ratio);
  return r;
}

double TwoNormFamily::max_ratio() const {
  double r = 0.0;
  for (const auto& m : members) r = std::max(r, m.ratio);
  return r;
}

TwoNormFamily build_family(int levels, double p, double q, const RectDomain& domain) {
  if (levels < 3) throw FamilyError("build_family: need at least 3 levels");
  if (!(p > 1.0) || !(q > p)) throw FamilyError("build_family: need 1 < p < q (equal norms give ratio 1)");
  if (levels > 7) throw FamilyError("build_family: at most 7 levels");
  domain.validate();
  TwoNormFamily fam;
  fam.p = p;
  fam.q = q;
  SpaceOptions fine_opts;
  fam.space = DiscreteSpace::build(domain, 1 << levels, 1 << levels, fine_opts);
  SpaceOptions coarse_opts;
  coarse_opts.check_inf_sup = false;
  for (int k = 1; k <= levels; ++k) {
    const int nx = 1 << k;
    const SpacePtr coarse = DiscreteSpace::build(domain, nx, nx, coarse_opts);
    Field hat = Field::zeros(coarse, Role::scalar);
    hat.coef[nx / 2 + (nx + 1) * (nx / 2)] = 1.0;
    Field u = interpolate_velocity(fam.space, [&hat](double x, double y) {
      return std::array<double, 2>{evaluate(hat, x, y)[0], 0.0};
    });
    FamilyMember m;
    m.level = k;
    const double np = norm_sym_grad_p(u, p);
    m.u = (1.0 / np) * u;
    m.norm_p = norm_sym_grad_p(m.u, p);
    m.norm_q = norm_sym_grad_p(m.u, q);
    m.ratio = m.norm_q / m.norm_p;
    if (!fam.members.empty() && !(m.ratio > fam.members.back().ratio))
      throw FamilyError("build_family: ratio not increasing at level " + std::to_string(k) +
                        " (mesh too coarse)");
    fam.members.push_back(std::move(m));
  }
  return fam;
}

double find_y_n(double n, double c2, double f1, double q) {
  return std::pow(n * f1 / c2, 1.0 / (q - 1.0));
}

double t_n(double x, double n, double c2, double f1, double q) {
  return c2 / n * std::pow(x, q - 1.0) - f1;
}

double y_n_norm(double norm_p, double norm_q, double n, double q) {
  const double scale = std::isfinite(n) ? std::pow(n, -penalty_exponent(q)) : 0.0;
  return std::max(scale * norm_q, norm_p);
}

std::pair<double, double> y_range(const TwoNormFamily& f, double n, double radius) {
  const double cap = std::pow(n, penalty_exponent(f.q));
  return {radius * std::min(f.min_ratio(), cap), radius * std::min(f.max_ratio(), cap)};
}

Construction construct_u_n(const TwoNormFamily& f, double n, double radius, double y,
                           double rel_tol) {
  int lo = 0, hi = 0;
  for (std::size_t i = 0; i < f.members.size(); ++i) {
    if (f.members[i].ratio < f.members[lo].ratio) lo = static_cast<int>(i);
    if (f.members[i].ratio > f.members[hi].ratio) hi = static_cast<int>(i);
  }
  const auto [ymin, ymax] = y_range(f, n, radius);
  if (y < ymin * (1.0 - 1e-14) || y > ymax * (1.0 + 1e-14))
    throw RangeError("construct_u_n: target " + std::to_string(y) + " outside [" +
                     std::to_string(ymin) + ", " + std::to_string(ymax) +
                     "]; deepen the family");
  // Y-norm after scaling onto the sphere, as a function of the path parameter
  auto y_of = [&](const PathPoint& pt) { return radius * pt.nq / y_n_norm(pt.np, pt.nq, n, f.q); };
  Construction c;
  c.member_lo = lo;
  c.member_hi = hi;
  double a = 0.0, b = 1.0;
  PathPoint pa = path_point(f, lo, hi, a);
  PathPoint best = pa;
  double theta = 0.0;
  if (std::abs(y_of(pa) - y) > rel_tol * y) {
    PathPoint pb = path_point(f, lo, hi, b);
    best = pb;
    theta = 1.0;
    double fa = y_of(pa) - y;
    if (std::abs(y_of(pb) - y) > rel_tol * y) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        PathPoint pm = path_point(f, lo, hi, mid);
        const double fm = y_of(pm) - y;
        c.bisection_steps = it + 1;
        best = pm;
        theta = mid;
        if (std::abs(fm) <= rel_tol * y) break;
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
    }
  }
  const double s = radius / y_n_norm(best.np, best.nq, n, f.q);
  c.u = s * best.w;
  c.theta = theta;
  c.norm_p = s * best.np;
  c.norm_q = s * best.nq;
  c.sphere = y_n_norm(c.norm_p, c.norm_q, n, f.q);
  return c;
}

double evaluate_P_n(double norm_p, double norm_q, double n, double g1, double f1, double p,
                    double q) {
  return g1 * std::pow(norm_p, p) + std::pow(norm_q, q) / n - f1 * norm_q;
}

double evaluate_P_n(const Field& u, double n, double g1, double f1, double p, double q) {
  return evaluate_P_n(norm_sym_grad_p(u, p), norm_sym_grad_p(u, q), n, g1, f1, p, q);
}

CounterexampleParams CounterexampleParams::resolved() const {
  CounterexampleParams c = *this;
  if (!(c.p > 1.0 && c.p < 2.0 && c.q > 2.0))
    throw std::invalid_argument("counterexample: need 1 < p < 2 < q");
  if (!(c.radius > 0.0 && c.f1 > 0.0 && c.g1 > 0.0))
    throw std::invalid_argument("counterexample: R, F1, G1 must be positive");
  if (!(c.c2 > 1.0)) throw std::invalid_argument("counterexample: c2 must exceed 1");
  if (c.c1 == 0.0) c.c1 = 2.0 * std::pow(c.radius, c.q - 1.0) / c.f1 * (1.0 + 1e-3);
  if (!(std::pow(c.radius, c.q - 1.0) / c.c1 - c.f1 / 2.0 < 0.0))
    throw std::invalid_argument("counterexample: c1 must satisfy R^(q-1)/c1 < F1/2");
  if (c.n_values.empty()) {
    for (int n = 1; n <= 64; ++n) c.n_values.push_back(n);
    for (int k = 7; k <= 14; ++k) c.n_values.push_back(std::ldexp(1.0, k));
  }
  for (double n : c.n_values)
    if (!(n >= 1.0)) throw std::invalid_argument("counterexample: n values must be >= 1");
  return c;
}

CounterexampleRun run_counterexample(const CounterexampleParams& in) {
  CounterexampleRun run;
  run.params = in.resolved();
  const auto& P = run.params;
  const TwoNormFamily fam = build_family(P.levels, P.p, P.q);
  for (const auto& m : fam.members) run.ratios.push_back(m.ratio);
  char buf[128];
  for (double n : P.n_values) {
    CounterexampleRecord r;
    r.n = n;
    r.c1 = P.c1;
    r.c2 = P.c2;
    r.f1 = P.f1;
    r.g1 = P.g1;
    r.radius = P.radius;
    r.p = P.p;
    r.q = P.q;
    r.y_n = find_y_n(n, P.c2, P.f1, P.q);
    r.f_n = std::max(std::pow(n, -penalty_exponent(P.q)), 1.0 / fam.max_ratio());
    const auto [ymin, ymax] = y_range(fam, n, P.radius);
    if (r.y_n >= ymin && r.y_n <= ymax) {
      const Construction c = construct_u_n(fam, n, P.radius, r.y_n);
      r.branch = 2;
      r.y_target = c.norm_q;
      r.sphere = c.sphere;
      r.P_n = evaluate_P_n(c.norm_p, c.norm_q, n, P.g1, P.f1, P.p, P.q);
      r.step2_bound_holds =
          r.P_n <= P.g1 * std::pow(P.radius, P.p) + std::pow(r.y_n, P.q) / n - P.f1 * r.y_n +
                       1e-12 * (1.0 + std::abs(r.P_n));
      std::snprintf(buf, sizeof buf, "path(L%d,L%d;theta=%.6f)", fam.members[c.member_lo].level,
                    fam.members[c.member_hi].level, c.theta);
      r.member_mix = buf;
    } else {
      // scaled members on the sphere; Step 1 takes one with G1 ||Du||_p^p < F1/2 ||u||_Y
      const bool step1 = std::pow(r.f_n, P.q - 1.0) >= P.c1 / n;
      double best = std::numeric_limits<double>::infinity();
      int best_k = -1;
      double bp = 0.0, bq = 0.0;
      for (std::size_t k = 0; k < fam.members.size(); ++k) {
        const auto& m = fam.members[k];
        const double s = P.radius / y_n_norm(m.norm_p, m.norm_q, n, P.q);
        const double np = s * m.norm_p, nq = s * m.norm_q;
        if (step1 && !(P.g1 * std::pow(np, P.p) < 0.5 * P.f1 * nq)) continue;
        const double v = evaluate_P_n(np, nq, n, P.g1, P.f1, P.p, P.q);
        if (v < best) {
          best = v;
          best_k = static_cast<int>(k);
          bp = np;
          bq = nq;
        }
      }
      r.branch = (step1 && best_k >= 0) ? 1 : 0;
      if (best_k >= 0) {
        r.P_n = best;
        r.y_target = bq;
        r.sphere = y_n_norm(bp, bq, n, P.q);
        std::snprintf(buf, sizeof buf, "member(L%d)", fam.members[best_k].level);
        r.member_mix = buf;
      } else {
        r.P_n = std::numeric_limits<double>::quiet_NaN();
        r.member_mix = "none";
      }
    }
    r.margin = -r.P_n;
    run.rows.push_back(r);
  }
  // N0: first grid point from which every row is negative beyond roundoff
  for (std::size_t i = run.rows.size(); i-- > 0;) {
    const auto& r = run.rows[i];
    const double scale = P.g1 * std::pow(P.radius, P.p) + P.f1 * r.y_target;
    if (!(r.P_n < -1e-12 * scale)) break;
    run.n0 = run.rows[i].n;
  }
  if (run.n0) {
    run.margin_increasing = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& r : run.rows) {
      if (r.n < *run.n0) continue;
      if (!(r.margin > prev)) run.margin_increasing = false;
      prev = r.margin;
    }
  }
  return run;
}

std::string counterexample_csv(const CounterexampleRun& run) {
  std::ostringstream os;
  os << "n,y_n,P_n,margin,member_mix,branch,sphere,y_realized\n";
  char buf[512];
  for (const auto& r : run.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s,%d,%.17g,%.17g\n", r.n, r.y_n,
                  r.P_n, r.margin, r.member_mix.c_str(), r.branch, r.sphere, r.y_target);
    os << buf;
  }
  return os.str();
}

}  // namespace shearlab
