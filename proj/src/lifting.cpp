#include "shearlab/lifting.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "shearlab/random.hpp"

namespace shearlab {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct BoundaryEdge {
  int n0, nm, n1;      // P2 nodes along the edge
  double nx, ny;       // outward unit normal
  double length;
};

std::vector<BoundaryEdge> boundary_edges(const DiscreteSpace& s) {
  const int stride = 2 * s.nx() + 1;
  const int top = 2 * s.ny();
  auto node = [stride](int I, int J) { return I + stride * J; };
  std::vector<BoundaryEdge> e;
  for (int i = 0; i < s.nx(); ++i) {
    e.push_back({node(2 * i, 0), node(2 * i + 1, 0), node(2 * i + 2, 0), 0.0, -1.0, s.hx()});
    e.push_back({node(2 * i + 2, top), node(2 * i + 1, top), node(2 * i, top), 0.0, 1.0, s.hx()});
  }
  for (int j = 0; j < s.ny(); ++j) {
    const int r = 2 * s.nx();
    e.push_back({node(r, 2 * j), node(r, 2 * j + 1), node(r, 2 * j + 2), 1.0, 0.0, s.hy()});
    e.push_back({node(0, 2 * j + 2), node(0, 2 * j + 1), node(0, 2 * j), -1.0, 0.0, s.hy()});
  }
  return e;
}

const std::vector<double>& edge_nodes() {
  static const std::vector<double> n = [] {
    std::vector<double> x, w;
    gauss_legendre(8, x, w);
    return x;
  }();
  return n;
}

const std::vector<double>& edge_weights() {
  static const std::vector<double> w = [] {
    std::vector<double> x, ww;
    gauss_legendre(8, x, ww);
    return ww;
  }();
  return w;
}

// Quadratic Lagrange basis on [0, 1] with nodes 0, 1/2, 1, and derivatives.
void edge_basis(double t, double* l, double* dl) {
  l[0] = 2.0 * (t - 0.5) * (t - 1.0);
  l[1] = -4.0 * t * (t - 1.0);
  l[2] = 2.0 * t * (t - 0.5);
  dl[0] = 4.0 * t - 3.0;
  dl[1] = -8.0 * t + 4.0;
  dl[2] = 4.0 * t - 1.0;
}

double g1_integral_abs(const BoundaryData& d, const DiscreteSpace& s, bool absolute) {
  if (d.g1_field) {
    if (!absolute) return s.p1_integrals().dot(d.g1_field->coef);
    const auto v = eval_scalar_qp(*d.g1_field);
    double acc = 0.0;
    for (int q = 0; q < s.num_qp(); ++q) acc += s.qp_w()[q] * std::abs(v.v[q]);
    return acc;
  }
  if (!d.g1) return 0.0;
  double acc = 0.0;
  for (int q = 0; q < s.num_qp(); ++q) {
    const double v = d.g1(s.qp_x()[q], s.qp_y()[q]);
    acc += s.qp_w()[q] * (absolute ? std::abs(v) : v);
  }
  return acc;
}

// Boundary coefficient vector (full velocity length; interior entries zero).
Eigen::VectorXd boundary_values(const BoundaryData& d, const DiscreteSpace& s) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s.num_velocity());
  const int np2 = s.num_p2();
  for (int n = 0; n < np2; ++n) {
    if (!s.boundary_p2(n)) continue;
    if (d.g2_nodal) {
      b[n] = (*d.g2_nodal)[n];
      b[np2 + n] = (*d.g2_nodal)[np2 + n];
    } else if (d.g2) {
      const auto x = s.p2_coord(n);
      const auto v = d.g2(x[0], x[1]);
      b[n] = v[0];
      b[np2 + n] = v[1];
    }
  }
  return b;
}

// int psi_k g1 for all P1 basis functions.
Eigen::VectorXd g1_moments(const BoundaryData& d, const DiscreteSpace& s) {
  if (d.g1_field) return s.mass_p1() * d.g1_field->coef;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(s.num_p1());
  if (!d.g1) return r;
  const int nq = s.qp_per_element();
  for (int e = 0; e < s.num_elements(); ++e) {
    const auto n1 = s.p1_nodes(e);
    for (int k = 0; k < nq; ++k) {
      const std::size_t q = static_cast<std::size_t>(e) * nq + k;
      const double v = s.qp_w()[q] * d.g1(s.qp_x()[q], s.qp_y()[q]);
      for (int a = 0; a < 3; ++a) r[n1[a]] += v * s.phi1(k, a);
    }
  }
  return r;
}

double lp_at_qp(const DiscreteSpace& s, const std::vector<double>& v, double p) {
  double acc = 0.0;
  for (int q = 0; q < s.num_qp(); ++q) acc += s.qp_w()[q] * std::pow(std::abs(v[q]), p);
  return std::pow(acc, 1.0 / p);
}

// Solvers reused across lifts on one space.
class LiftSolver {
 public:
  explicit LiftSolver(SpacePtr space) : space_(std::move(space)) {
    const auto& s = *space_;
    const int np2 = s.num_p2();
    scalar_free_.assign(np2, -1);
    int nf = 0;
    for (int n = 0; n < np2; ++n)
      if (!s.boundary_p2(n)) scalar_free_[n] = nf++;
    std::vector<Eigen::Triplet<double>> tff, tfb;
    const auto& k = s.stiffness_p2();
    for (int c = 0; c < k.outerSize(); ++c)
      for (SpMat::InnerIterator it(k, c); it; ++it) {
        const int i = scalar_free_[it.row()];
        if (i < 0) continue;
        const int j = scalar_free_[it.col()];
        if (j >= 0)
          tff.emplace_back(i, j, it.value());
        else
          tfb.emplace_back(i, static_cast<int>(it.col()), it.value());
      }
    kff_.resize(nf, nf);
    kff_.setFromTriplets(tff.begin(), tff.end());
    kfb_.resize(nf, np2);
    kfb_.setFromTriplets(tfb.begin(), tfb.end());
    harmonic_.compute(kff_);
    if (harmonic_.info() != Eigen::Success)
      throw std::runtime_error("lift: harmonic extension factorization failed");

    // Bordered Stokes system for the zero-boundary correction.
    const int nv = s.num_free();
    const int np = s.num_p1();
    std::vector<Eigen::Triplet<double>> t;
    for (int c = 0; c < 2; ++c)
      for (int cc = 0; cc < kff_.outerSize(); ++cc)
        for (SpMat::InnerIterator it(kff_, cc); it; ++it)
          t.emplace_back(c * nf + it.row(), c * nf + it.col(), it.value());
    const auto& b = s.divergence();
    const auto& fi = s.free_index();
    for (int cc = 0; cc < b.outerSize(); ++cc)
      for (SpMat::InnerIterator it(b, cc); it; ++it) {
        const int j = fi[it.col()];
        if (j < 0) continue;
        t.emplace_back(nv + it.row(), j, it.value());
        t.emplace_back(j, nv + it.row(), it.value());
      }
    for (int kk = 0; kk < np; ++kk) {
      t.emplace_back(nv + kk, nv + np, s.p1_integrals()[kk]);
      t.emplace_back(nv + np, nv + kk, s.p1_integrals()[kk]);
    }
    SpMat z(nv + np + 1, nv + np + 1);
    z.setFromTriplets(t.begin(), t.end());
    stokes_.analyzePattern(z);
    stokes_.factorize(z);
    if (stokes_.info() != Eigen::Success)
      throw std::runtime_error("lift: singular divergence coupling (inf-sup = " +
                               std::to_string(s.inf_sup()) + ")");
    mass1_.compute(s.mass_p1());
  }

  LiftField lift(const BoundaryData& data, double p, double s_exp, double delta) const {
    const auto& s = *space_;
    LiftField out;
    out.p = p;
    out.s = s_exp;
    out.delta = delta;
    out.compatibility_defect = check_compatibility(data, s);
    const double tol = compatibility_tolerance(data, s);
    if (std::abs(out.compatibility_defect) > tol) {
      IncompatibleData err("lift: incompatible data, defect " +
                           fmt_g(out.compatibility_defect) + " exceeds tolerance " +
                           fmt_g(tol));
      err.defect = out.compatibility_defect;
      throw err;
    }
    const int np2 = s.num_p2();
    // g_hat: boundary interpolant with discrete harmonic interior.
    out.g_hat = Field::zeros(space_, Role::velocity);
    out.g_hat.coef = boundary_values(data, s);
    for (int c = 0; c < 2; ++c) {
      const Eigen::VectorXd xb = out.g_hat.coef.segment(c * np2, np2);
      const Eigen::VectorXd xf = harmonic_.solve(-(kfb_ * xb));
      for (int n = 0; n < np2; ++n)
        if (scalar_free_[n] >= 0) out.g_hat.coef[c * np2 + n] = xf[scalar_free_[n]];
    }
    // w: div w = Pi(g1 - div g_hat), zero boundary, minimal gradient.
    const Eigen::VectorXd m_g1 = g1_moments(data, s);
    out.g1 = Field::zeros(space_, Role::scalar);
    out.g1.coef = mass1_.solve(m_g1);
    const Eigen::VectorXd r = m_g1 - s.divergence() * out.g_hat.coef;
    const int nv = s.num_free();
    const int np = s.num_p1();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + np + 1);
    rhs.segment(nv, np) = r;
    const Eigen::VectorXd sol = stokes_.solve(rhs);
    if (!sol.allFinite()) throw std::runtime_error("lift: saddle-point solve failed");
    out.w = extend_free(space_, sol.head(nv));
    out.g = out.g_hat + out.w;

    const Eigen::VectorXd d = mass1_.solve(s.divergence() * out.g.coef - m_g1);
    out.divergence_defect = std::sqrt(std::max(0.0, d.dot(s.mass_p1() * d)));
    out.boundary_defect = boundary_error(out.g, data);
    out.norms = lift_norms(out, p, s_exp, delta);
    return out;
  }

  /// Zero-boundary, discretely divergence-free field closest to u in the H1 seminorm.
  Field solenoidal(const Field& u) const {
    const int nv = space_->num_free();
    const int np = space_->num_p1();
    const int nf = kff_.rows();
    Eigen::VectorXd uf = restrict_free(u);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + np + 1);
    rhs.segment(0, nf) = kff_ * uf.segment(0, nf);
    rhs.segment(nf, nf) = kff_ * uf.segment(nf, nf);
    const Eigen::VectorXd sol = stokes_.solve(rhs);
    if (!sol.allFinite()) throw std::runtime_error("solenoidal_projection: solve failed");
    return extend_free(space_, sol.head(nv));
  }

  /// S^{-1} r for the divergence Schur complement S = B A^{-1} B^T on zero-mean r.
  Eigen::VectorXd schur_solve(const Eigen::VectorXd& r) const {
    const int nv = space_->num_free();
    const int np = space_->num_p1();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + np + 1);
    rhs.segment(nv, np) = r;
    return -stokes_.solve(rhs).segment(nv, np);
  }

  const Eigen::SimplicialLDLT<SpMat>& mass1() const { return mass1_; }

  double boundary_error(const Field& g, const BoundaryData& data) const {
    // nodal data (or g2 = 0) are imposed exactly
    if (data.g2_nodal || !data.g2) return 0.0;
    const auto& s = *space_;
    const int np2 = s.num_p2();
    double acc = 0.0;
    for (const auto& e : boundary_edges(s)) {
      const auto a = s.p2_coord(e.n0), b = s.p2_coord(e.n1);
      for (std::size_t k = 0; k < edge_nodes().size(); ++k) {
        const double t = edge_nodes()[k];
        double l[3], dl[3];
        edge_basis(t, l, dl);
        const double x = a[0] + t * (b[0] - a[0]), y = a[1] + t * (b[1] - a[1]);
        const auto ex = data.g2(x, y);
        const int nn[3] = {e.n0, e.nm, e.n1};
        double v0 = 0.0, v1 = 0.0;
        for (int i = 0; i < 3; ++i) {
          v0 += l[i] * g.coef[nn[i]];
          v1 += l[i] * g.coef[np2 + nn[i]];
        }
        acc += edge_weights()[k] * e.length * ((v0 - ex[0]) * (v0 - ex[0]) + (v1 - ex[1]) * (v1 - ex[1]));
      }
    }
    return std::sqrt(acc);
  }

 private:
  SpacePtr space_;
  std::vector<int> scalar_free_;
  SpMat kff_, kfb_;
  Eigen::SimplicialLDLT<SpMat> harmonic_;
  Eigen::SparseLU<SpMat> stokes_;
  Eigen::SimplicialLDLT<SpMat> mass1_;
};

}  // namespace

BoundaryData BoundaryData::scaled(double lambda) const {
  BoundaryData d = *this;
  if (g1) d.g1 = [f = g1, lambda](double x, double y) { return lambda * f(x, y); };
  if (g2)
    d.g2 = [f = g2, lambda](double x, double y) {
      auto v = f(x, y);
      return std::array<double, 2>{lambda * v[0], lambda * v[1]};
    };
  if (g1_field) d.g1_field = lambda * *g1_field;
  if (g2_nodal) d.g2_nodal = lambda * *g2_nodal;
  return d;
}

double check_compatibility(const BoundaryData& data, const DiscreteSpace& s) {
  const double area = g1_integral_abs(data, s, false);
  double flux = 0.0;
  const int np2 = s.num_p2();
  for (const auto& e : boundary_edges(s)) {
    if (data.g2_nodal) {
      // quadratic trace: Simpson is exact
      const auto& v = *data.g2_nodal;
      auto fn = [&](int n) { return v[n] * e.nx + v[np2 + n] * e.ny; };
      flux += e.length * (fn(e.n0) + 4.0 * fn(e.nm) + fn(e.n1)) / 6.0;
    } else if (data.g2) {
      const auto a = s.p2_coord(e.n0), b = s.p2_coord(e.n1);
      for (std::size_t k = 0; k < edge_nodes().size(); ++k) {
        const double t = edge_nodes()[k];
        const auto v = data.g2(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]));
        flux += edge_weights()[k] * e.length * (v[0] * e.nx + v[1] * e.ny);
      }
    }
  }
  return area - flux;
}

double compatibility_tolerance(const BoundaryData& data, const DiscreteSpace& s) {
  return 1e-8 * (1.0 + g1_integral_abs(data, s, true));
}

double boundary_trace_norm(const Field& u, double p) {
  const auto& s = *u.space;
  const int np2 = s.num_p2();
  double acc = 0.0;
  for (const auto& e : boundary_edges(s)) {
    const int nn[3] = {e.n0, e.nm, e.n1};
    for (std::size_t k = 0; k < edge_nodes().size(); ++k) {
      double l[3], dl[3];
      edge_basis(edge_nodes()[k], l, dl);
      double v0 = 0, v1 = 0, d0 = 0, d1 = 0;
      for (int i = 0; i < 3; ++i) {
        v0 += l[i] * u.coef[nn[i]];
        v1 += l[i] * u.coef[np2 + nn[i]];
        d0 += dl[i] * u.coef[nn[i]] / e.length;
        d1 += dl[i] * u.coef[np2 + nn[i]] / e.length;
      }
      acc += edge_weights()[k] * e.length *
             (std::pow(std::hypot(v0, v1), p) + std::pow(std::hypot(d0, d1), p));
    }
  }
  return std::pow(acc, 1.0 / p);
}

LiftNorms lift_norms(const LiftField& l, double p, double s, double delta) {
  LiftNorms n;
  n.w1p = norm_W1p(l.g, p);
  n.w1s = norm_W1p(l.g, s);
  n.sym_s = norm_sym_grad_p(l.g, s);
  n.div_s = norm_div_p(l.g, s);
  n.shifted_p = norm_shifted_sym_grad_p(l.g, delta, p);
  n.g1_p = norm_Lp(l.g1, p);
  n.boundary_p = boundary_trace_norm(l.g, p);
  return n;
}

LiftField lift(const BoundaryData& data, const SpacePtr& space, double p, double s,
               double delta) {
  return LiftSolver(space).lift(data, p, s, delta);
}

std::vector<LiftField> lift(const std::vector<BoundaryData>& data, const SpacePtr& space,
                            double p, double s, double delta) {
  const LiftSolver solver(space);
  std::vector<LiftField> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(solver.lift(d, p, s, delta));
  return out;
}

std::vector<Field> solenoidal_projection(const SpacePtr& space, const std::vector<Field>& fields) {
  const LiftSolver solver(space);
  std::vector<Field> out;
  out.reserve(fields.size());
  for (const auto& f : fields) {
    if (f.space != space || f.role != Role::velocity)
      throw std::invalid_argument("solenoidal_projection: field of another space");
    out.push_back(solver.solenoidal(f));
  }
  return out;
}

namespace {

// Smooth random field over the domain from a few cosine modes.
struct CosineModes {
  RectDomain dom;
  std::vector<std::array<double, 4>> modes;  // m, n, coefficient, phase

  static CosineModes random(const RectDomain& d, Rng& rng, int max_mode, bool skip_constant) {
    CosineModes c{d, {}};
    for (int m = 0; m <= max_mode; ++m)
      for (int n = 0; n <= max_mode; ++n) {
        if (skip_constant && m == 0 && n == 0) continue;
        c.modes.push_back({double(m), double(n), rng.normal() / (1.0 + m + n), rng.uniform(0.0, 1.0)});
      }
    return c;
  }
  double operator()(double x, double y) const {
    const double xs = (x - dom.x0) / (dom.x1 - dom.x0), ys = (y - dom.y0) / (dom.y1 - dom.y0);
    double v = 0.0;
    for (const auto& md : modes)
      v += md[2] * std::cos(M_PI * (md[0] * xs + md[3])) * std::cos(M_PI * (md[1] * ys + md[3]));
    return v;
  }
};

ProbeTrial evaluate_trial(const LiftSolver& solver, const SpacePtr& space, const BoundaryData& d,
                          double p, bool g1_only) {
  const LiftField l = solver.lift(d, p, p, 0.0);
  ProbeTrial t;
  t.g1_only = g1_only;
  t.g_norm = l.norms.w1p;
  t.boundary_norm = boundary_trace_norm(l.g_hat, p);
  t.g1_norm = l.norms.g1_p;
  if (t.boundary_norm > 0.0) t.lift_ratio = norm_W1p(l.g_hat, p) / t.boundary_norm;
  const auto& s = *space;
  const auto gv = eval_scalar_qp(l.g1);
  const auto hv = eval_velocity_qp(l.g_hat);
  std::vector<double> res(s.num_qp());
  for (int q = 0; q < s.num_qp(); ++q) res[q] = gv.v[q] - (hv.g00[q] + hv.g11[q]);
  const double rn = lp_at_qp(s, res, p);
  if (rn > 1e-300) t.bog_ratio = norm_W1p(l.w, p) / rn;
  return t;
}

}  // namespace

OperatorNormProbe operator_norm_probe(const SpacePtr& space, int trials, double p,
                                      std::uint64_t seed, const OperatorNormProbe* previous) {
  const LiftSolver solver(space);
  const auto& s = *space;
  const RectDomain dom = s.domain();
  Rng rng(seed);
  OperatorNormProbe out;
  auto consider = [&](const BoundaryData& d, bool g1_only) {
    const ProbeTrial t = evaluate_trial(solver, space, d, p, g1_only);
    if (t.lift_ratio > out.c_lift_est) {
      out.c_lift_est = t.lift_ratio;
      out.lift_witness = d;
    }
    if (t.bog_ratio > out.c_bog_est) {
      out.c_bog_est = t.bog_ratio;
      out.bog_witness = d;
    }
    if (g1_only) out.c_bog_g1_only = std::max(out.c_bog_g1_only, t.bog_ratio);
    if (t.g_norm > 0.0) out.trials.push_back(t);
  };
  // g1 + const, with the constant fixed by the discrete compatibility defect on this mesh
  auto compatible = [&](BoundaryData d) {
    const double shift = -check_compatibility(d, s) / dom.area();
    d.g1 = [f = d.g1, shift](double x, double y) { return (f ? f(x, y) : 0.0) + shift; };
    return d;
  };
  if (previous) {
    consider(compatible(previous->lift_witness), false);
    consider(compatible(previous->bog_witness), !previous->bog_witness.g2);
  }
  for (int k = 0; k < trials; ++k) {
    // 0 smooth boundary, 1 smooth divergence, 2 both, 3 mesh-scale divergence,
    // 4 mesh-scale boundary values
    const int kind = k % 5;
    BoundaryData d;
    if (kind == 0 || kind == 2) {
      const CosineModes a = CosineModes::random(dom, rng, 3, false);
      const CosineModes b = CosineModes::random(dom, rng, 3, false);
      d.g2 = [a, b](double x, double y) { return std::array<double, 2>{a(x, y), b(x, y)}; };
    } else if (kind == 4) {
      Field u = Field::zeros(space, Role::velocity);
      for (int n = 0; n < s.num_p2(); ++n)
        if (s.boundary_p2(n)) {
          u.coef[n] = rng.normal();
          u.coef[s.num_p2() + n] = rng.normal();
        }
      d.g2 = [u](double x, double y) { return evaluate(u, x, y); };
    }
    if (kind == 1 || kind == 2) {
      const CosineModes c = CosineModes::random(dom, rng, 3, true);
      d.g1 = [c](double x, double y) { return c(x, y); };
    } else if (kind == 3) {
      Field f = Field::zeros(space, Role::scalar);
      for (int n = 0; n < s.num_p1(); ++n) f.coef[n] = rng.normal();
      d.g1 = [f](double x, double y) { return evaluate(f, x, y)[0]; };
    }
    consider(compatible(d), kind == 1 || kind == 3);
  }
  // Power iteration on S^{-1} M1 from rough starts: the divergence data whose
  // correction has the largest gradient energy.
  for (int k = 0; k < std::min(2, trials); ++k) {
    Field f = Field::zeros(space, Role::scalar);
    for (int n = 0; n < s.num_p1(); ++n) f.coef[n] = rng.normal();
    for (int it = 0; it < 20; ++it) {
      remove_mean(f);
      f.coef = solver.schur_solve(s.mass_p1() * f.coef);
      f.coef /= std::sqrt(f.coef.dot(s.mass_p1() * f.coef));
    }
    remove_mean(f);
    BoundaryData d;
    d.g1 = [f](double x, double y) { return evaluate(f, x, y)[0]; };
    consider(compatible(d), true);
  }
  return out;
}

}  // namespace shearlab
