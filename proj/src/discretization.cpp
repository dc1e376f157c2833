#include "shearlab/discretization.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shearlab/kernels/kernels.hpp"

namespace shearlab {

void RectDomain::validate() const {
  if (dim != 2) throw std::invalid_argument("domain: only d = 2 is implemented");
  if (!(x1 > x0 && y1 > y0)) throw std::invalid_argument("domain: side lengths must be positive");
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton on P_n from Chebyshev-like starts; nodes come out in increasing order.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = 0.5 * (1.0 - x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

TriangleRule triangle_rule(int n) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  TriangleRule r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      r.xi.push_back(x[i]);
      r.eta.push_back(x[j] * (1.0 - x[i]));
      r.w.push_back(w[i] * w[j] * (1.0 - x[i]));
    }
  return r;
}

void VelocityQp::resize(std::size_t n) {
  for (auto* v : {&u0, &u1, &g00, &g01, &g10, &g11}) v->assign(n, 0.0);
}

void ScalarQp::resize(std::size_t n) {
  for (auto* c : {&v, &dx, &dy}) c->assign(n, 0.0);
}

namespace {

void p2_reference(double xi, double eta, double* phi, double* dphi) {
  const double l[3] = {1.0 - xi - eta, xi, eta};
  const double dl[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  for (int a = 0; a < 3; ++a) {
    phi[a] = l[a] * (2.0 * l[a] - 1.0);
    for (int r = 0; r < 2; ++r) dphi[a * 2 + r] = (4.0 * l[a] - 1.0) * dl[a][r];
  }
  static constexpr int edge[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int m = 0; m < 3; ++m) {
    const int i = edge[m][0], j = edge[m][1];
    phi[3 + m] = 4.0 * l[i] * l[j];
    for (int r = 0; r < 2; ++r)
      dphi[(3 + m) * 2 + r] = 4.0 * (l[j] * dl[i][r] + l[i] * dl[j][r]);
  }
}

}  // namespace

std::shared_ptr<const DiscreteSpace> DiscreteSpace::build(const RectDomain& domain, int nx, int ny,
                                                          const SpaceOptions& opts) {
  std::shared_ptr<DiscreteSpace> s(new DiscreteSpace());
  s->setup(domain, nx, ny, opts);
  return s;
}

std::shared_ptr<const DiscreteSpace> DiscreteSpace::refined() const {
  return build(domain_, 2 * nx_, 2 * ny_, opts_);
}

std::shared_ptr<const DiscreteSpace> DiscreteSpace::with_quadrature(int quad_points) const {
  SpaceOptions o = opts_;
  o.quad_points = quad_points;
  o.check_inf_sup = false;
  std::shared_ptr<DiscreteSpace> s(new DiscreteSpace());
  s->setup(domain_, nx_, ny_, o);
  s->inf_sup_ = inf_sup_;
  return s;
}

double DiscreteSpace::h() const { return std::hypot(hx(), hy()); }

void DiscreteSpace::setup(const RectDomain& d, int nx, int ny, const SpaceOptions& opts) {
  d.validate();
  if (nx < 2 || ny < 2) throw std::invalid_argument("build_space: nx, ny >= 2 required");
  if (opts.quad_points < 1) throw std::invalid_argument("build_space: quad_points >= 1 required");
  domain_ = d;
  nx_ = nx;
  ny_ = ny;
  opts_ = opts;

  const int stride = 2 * nx + 1;
  auto vtx = [&](int i, int j) { return 2 * i + stride * 2 * j; };
  auto mid = [&](int a, int b) {
    const int ia = a % stride, ja = a / stride, ib = b % stride, jb = b / stride;
    return (ia + ib) / 2 + stride * ((ja + jb) / 2);
  };
  p2_.clear();
  p2_.reserve(num_elements());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v00 = vtx(i, j), v10 = vtx(i + 1, j), v01 = vtx(i, j + 1), v11 = vtx(i + 1, j + 1);
      const double cx = (i + 0.5) - 0.5 * nx, cy = (j + 0.5) - 0.5 * ny;
      std::array<std::array<int, 3>, 2> tri;
      if (cx * cy >= 0.0)
        tri = {{{v00, v10, v11}, {v00, v11, v01}}};
      else
        tri = {{{v00, v10, v01}, {v10, v11, v01}}};
      for (const auto& t : tri)
        p2_.push_back({t[0], t[1], t[2], mid(t[0], t[1]), mid(t[1], t[2]), mid(t[2], t[0])});
    }

  const int np2 = num_p2();
  boundary_.assign(np2, 0);
  for (int n = 0; n < np2; ++n) {
    const int I = n % stride, J = n / stride;
    boundary_[n] = (I == 0 || J == 0 || I == 2 * nx || J == 2 * ny) ? 1 : 0;
  }
  free_index_.assign(2 * np2, -1);
  free_dofs_.clear();
  for (int c = 0; c < 2; ++c)
    for (int n = 0; n < np2; ++n)
      if (!boundary_[n]) {
        free_index_[c * np2 + n] = static_cast<int>(free_dofs_.size());
        free_dofs_.push_back(c * np2 + n);
      }

  rule_ = triangle_rule(opts.quad_points);
  const int nq = rule_.size();
  phi2_.assign(nq * 6, 0.0);
  dphi2_.assign(nq * 12, 0.0);
  phi1_.assign(nq * 3, 0.0);
  for (int k = 0; k < nq; ++k) {
    p2_reference(rule_.xi[k], rule_.eta[k], &phi2_[k * 6], &dphi2_[k * 12]);
    phi1_[k * 3 + 0] = 1.0 - rule_.xi[k] - rule_.eta[k];
    phi1_[k * 3 + 1] = rule_.xi[k];
    phi1_[k * 3 + 2] = rule_.eta[k];
  }

  const int ne = num_elements();
  jinv_.resize(ne);
  det_.resize(ne);
  qx_.resize(static_cast<std::size_t>(ne) * nq);
  qy_.resize(qx_.size());
  qw_.resize(qx_.size());
  for (int e = 0; e < ne; ++e) {
    const auto x0 = p2_coord(p2_[e][0]), x1 = p2_coord(p2_[e][1]), x2 = p2_coord(p2_[e][2]);
    const double j00 = x1[0] - x0[0], j01 = x2[0] - x0[0];
    const double j10 = x1[1] - x0[1], j11 = x2[1] - x0[1];
    const double det = j00 * j11 - j01 * j10;
    if (!(det > 0.0)) throw std::logic_error("build_space: element orientation");
    jinv_[e] = {j11 / det, -j01 / det, -j10 / det, j00 / det};
    det_[e] = det;
    for (int k = 0; k < nq; ++k) {
      const std::size_t q = static_cast<std::size_t>(e) * nq + k;
      qx_[q] = x0[0] + j00 * rule_.xi[k] + j01 * rule_.eta[k];
      qy_[q] = x0[1] + j10 * rule_.xi[k] + j11 * rule_.eta[k];
      qw_[q] = rule_.w[k] * det;
    }
  }
  assemble();
  if (opts.check_inf_sup) {
    inf_sup_ = compute_inf_sup();
    if (!(inf_sup_ > 1e-6)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "build_space: discrete inf-sup check failed (beta = %.3e on %dx%d mesh)",
                    inf_sup_, nx, ny);
      throw std::runtime_error(buf);
    }
  }
}

std::array<int, 3> DiscreteSpace::p1_nodes(int e) const {
  const auto& n = p2_[e];
  return {p2_to_p1(n[0]), p2_to_p1(n[1]), p2_to_p1(n[2])};
}

std::array<double, 2> DiscreteSpace::p2_coord(int node) const {
  const int stride = 2 * nx_ + 1;
  const int I = node % stride, J = node / stride;
  return {domain_.x0 + 0.5 * hx() * I, domain_.y0 + 0.5 * hy() * J};
}

std::array<double, 2> DiscreteSpace::p1_coord(int v) const {
  const int i = v % (nx_ + 1), j = v / (nx_ + 1);
  return {domain_.x0 + hx() * i, domain_.y0 + hy() * j};
}

int DiscreteSpace::p2_to_p1(int node) const {
  const int stride = 2 * nx_ + 1;
  const int I = node % stride, J = node / stride;
  if (I % 2 != 0 || J % 2 != 0) return -1;
  return I / 2 + (nx_ + 1) * (J / 2);
}

std::array<double, 2> DiscreteSpace::grad_phi2(int e, int k, int a) const {
  const auto& ji = jinv_[e];
  const double r0 = dphi2_[k * 12 + a * 2], r1 = dphi2_[k * 12 + a * 2 + 1];
  return {ji[0] * r0 + ji[2] * r1, ji[1] * r0 + ji[3] * r1};
}

std::array<double, 2> DiscreteSpace::grad_phi1(int e, int a) const {
  static constexpr double dl[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  const auto& ji = jinv_[e];
  return {ji[0] * dl[a][0] + ji[2] * dl[a][1], ji[1] * dl[a][0] + ji[3] * dl[a][1]};
}

int DiscreteSpace::locate(double x, double y, std::array<double, 3>& lambda) const {
  const int i = std::clamp(static_cast<int>(std::floor((x - domain_.x0) / hx())), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((y - domain_.y0) / hy())), 0, ny_ - 1);
  int best = -1;
  double best_min = -1e300;
  for (int t = 0; t < 2; ++t) {
    const int e = 2 * (i + nx_ * j) + t;
    const auto v0 = p2_coord(p2_[e][0]);
    const auto& ji = jinv_[e];
    const double dx = x - v0[0], dy = y - v0[1];
    const double xi = ji[0] * dx + ji[1] * dy;
    const double eta = ji[2] * dx + ji[3] * dy;
    const std::array<double, 3> l = {1.0 - xi - eta, xi, eta};
    const double m = std::min({l[0], l[1], l[2]});
    if (m > best_min) {
      best_min = m;
      best = e;
      lambda = l;
    }
  }
  return best;
}

void DiscreteSpace::assemble() {
  const int ne = num_elements();
  const int nq = rule_.size();
  const int np2 = num_p2();
  std::vector<Eigen::Triplet<double>> tm1, tm2, tk2, tb;
  tm1.reserve(ne * 9);
  tm2.reserve(ne * 36);
  tk2.reserve(ne * 36);
  tb.reserve(ne * 36);
  p1int_ = Eigen::VectorXd::Zero(num_p1());
  for (int e = 0; e < ne; ++e) {
    const auto& n2 = p2_[e];
    const auto n1 = p1_nodes(e);
    double lm1[3][3] = {}, lm2[6][6] = {}, lk2[6][6] = {}, lb[3][2][6] = {};
    for (int k = 0; k < nq; ++k) {
      const double w = qw_[static_cast<std::size_t>(e) * nq + k];
      std::array<std::array<double, 2>, 6> g;
      for (int a = 0; a < 6; ++a) g[a] = grad_phi2(e, k, a);
      for (int a = 0; a < 3; ++a) {
        p1int_[n1[a]] += w * phi1(k, a);
        for (int b = 0; b < 3; ++b) lm1[a][b] += w * phi1(k, a) * phi1(k, b);
        for (int b = 0; b < 6; ++b)
          for (int c = 0; c < 2; ++c) lb[a][c][b] += w * phi1(k, a) * g[b][c];
      }
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
          lm2[a][b] += w * phi2(k, a) * phi2(k, b);
          lk2[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) tm1.emplace_back(n1[a], n1[b], lm1[a][b]);
      for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 6; ++b) tb.emplace_back(n1[a], c * np2 + n2[b], lb[a][c][b]);
    }
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        tm2.emplace_back(n2[a], n2[b], lm2[a][b]);
        tk2.emplace_back(n2[a], n2[b], lk2[a][b]);
      }
  }
  m1_.resize(num_p1(), num_p1());
  m1_.setFromTriplets(tm1.begin(), tm1.end());
  m2_.resize(np2, np2);
  m2_.setFromTriplets(tm2.begin(), tm2.end());
  k2_.resize(np2, np2);
  k2_.setFromTriplets(tk2.begin(), tk2.end());
  b_.resize(num_p1(), 2 * np2);
  b_.setFromTriplets(tb.begin(), tb.end());
}

double DiscreteSpace::compute_inf_sup(int iterations) const {
  // Bordered saddle system [A B^T 0; B 0 m; 0 m^T 0] with A the vector Laplacian on
  // free dofs; solving with right-hand side [0; r; 0] gives z = -S^{-1} r.
  const int nf = num_free();
  const int np = num_p1();
  const int np2 = num_p2();
  std::vector<Eigen::Triplet<double>> t;
  for (int k = 0; k < k2_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(k2_, k); it; ++it)
      for (int c = 0; c < 2; ++c) {
        const int fi = free_index_[c * np2 + it.row()], fj = free_index_[c * np2 + it.col()];
        if (fi >= 0 && fj >= 0) t.emplace_back(fi, fj, it.value());
      }
  for (int k = 0; k < b_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(b_, k); it; ++it) {
      const int fj = free_index_[it.col()];
      if (fj < 0) continue;
      t.emplace_back(nf + it.row(), fj, it.value());
      t.emplace_back(fj, nf + it.row(), it.value());
    }
  for (int k = 0; k < np; ++k) {
    t.emplace_back(nf + k, nf + np, p1int_[k]);
    t.emplace_back(nf + np, nf + k, p1int_[k]);
  }
  Eigen::SparseMatrix<double> z(nf + np + 1, nf + np + 1);
  z.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(z);
  lu.factorize(z);
  if (lu.info() != Eigen::Success) return 0.0;

  // Lanczos on S^+ M in the M inner product, restricted to mean-zero pressures;
  // its largest eigenvalue is 1 / beta^2.
  const double total = p1int_.sum();
  auto project = [&](Eigen::VectorXd& y) { y.array() -= p1int_.dot(y) / total; };
  const int kmax = std::min(iterations, np - 1);
  std::vector<Eigen::VectorXd> basis, mbasis;
  std::vector<double> alpha, beta;
  Eigen::VectorXd v(np);
  for (int k = 0; k < np; ++k) v[k] = std::sin(1.0 + 7.3 * k) + 0.3 * std::cos(0.7 * k * k);
  project(v);
  v /= std::sqrt(v.dot(m1_ * v));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + np + 1);
  double theta = 0.0;
  for (int j = 0; j < kmax; ++j) {
    basis.push_back(v);
    mbasis.push_back(m1_ * v);
    rhs.setZero();
    rhs.segment(nf, np) = mbasis.back();
    Eigen::VectorXd w = -lu.solve(rhs).segment(nf, np);
    project(w);
    alpha.push_back(w.dot(mbasis.back()));
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < basis.size(); ++i) w -= w.dot(mbasis[i]) * basis[i];
    const double b = std::sqrt(std::max(w.dot(m1_ * w), 0.0));
    const bool last = b <= 1e-14 * std::abs(alpha.back()) || j + 1 == kmax;
    if ((j + 1) % 5 == 0 || last) {
      const int m = static_cast<int>(alpha.size());
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
      const double next = es.eigenvalues().maxCoeff();
      const bool converged = std::abs(next - theta) <= 1e-12 * std::abs(next);
      theta = next;
      if (converged || last) break;
    }
    beta.push_back(b);
    v = w / b;
  }
  if (!(theta > 0.0) || !std::isfinite(theta)) return 0.0;
  return std::sqrt(1.0 / theta);
}

// ---------------------------------------------------------------------------
// Fields

Field Field::zeros(SpacePtr space, Role role) {
  Field f;
  f.role = role;
  f.coef = Eigen::VectorXd::Zero(space->num_dofs(role));
  f.space = std::move(space);
  return f;
}

Field Field::rebind(SpacePtr other) const {
  if (other->nx() != space->nx() || other->ny() != space->ny())
    throw std::invalid_argument("Field::rebind: mesh mismatch");
  Field f = *this;
  f.space = std::move(other);
  return f;
}

Field& Field::operator+=(const Field& o) {
  if (o.coef.size() != coef.size()) throw std::invalid_argument("Field: size mismatch");
  coef += o.coef;
  return *this;
}

Field& Field::operator-=(const Field& o) {
  if (o.coef.size() != coef.size()) throw std::invalid_argument("Field: size mismatch");
  coef -= o.coef;
  return *this;
}

Field& Field::operator*=(double s) {
  coef *= s;
  return *this;
}

Field interpolate_velocity(SpacePtr space, const VectorFn& fn) {
  Field f = Field::zeros(space, Role::velocity);
  const int np2 = space->num_p2();
  for (int n = 0; n < np2; ++n) {
    const auto x = space->p2_coord(n);
    const auto v = fn(x[0], x[1]);
    f.coef[n] = v[0];
    f.coef[np2 + n] = v[1];
  }
  return f;
}

Field interpolate_scalar(SpacePtr space, const ScalarFn& fn, Role role) {
  if (role == Role::velocity) throw std::invalid_argument("interpolate_scalar: scalar role required");
  Field f = Field::zeros(space, role);
  for (int v = 0; v < space->num_p1(); ++v) {
    const auto x = space->p1_coord(v);
    f.coef[v] = fn(x[0], x[1]);
  }
  return f;
}

namespace {

Eigen::VectorXd solve_p1_mass(const DiscreteSpace& s, const Eigen::VectorXd& rhs) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(s.mass_p1());
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("P1 mass factorization failed");
  return ldlt.solve(rhs);
}

}  // namespace

Field project_scalar(SpacePtr space, const ScalarFn& fn, Role role) {
  if (role == Role::velocity) throw std::invalid_argument("project_scalar: scalar role required");
  const auto& s = *space;
  const int nq = s.qp_per_element();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s.num_p1());
  for (int e = 0; e < s.num_elements(); ++e) {
    const auto n1 = s.p1_nodes(e);
    for (int k = 0; k < nq; ++k) {
      const std::size_t q = static_cast<std::size_t>(e) * nq + k;
      const double v = s.qp_w()[q] * fn(s.qp_x()[q], s.qp_y()[q]);
      for (int a = 0; a < 3; ++a) rhs[n1[a]] += v * s.phi1(k, a);
    }
  }
  Field f = Field::zeros(space, role);
  f.coef = solve_p1_mass(s, rhs);
  return f;
}

std::array<double, 2> evaluate(const Field& f, double x, double y) {
  const auto& s = *f.space;
  std::array<double, 3> l;
  const int e = s.locate(x, y, l);
  if (f.role == Role::velocity) {
    double phi[6], dphi[12];
    p2_reference(l[1], l[2], phi, dphi);
    const auto& n = s.p2_nodes(e);
    std::array<double, 2> v{0.0, 0.0};
    for (int a = 0; a < 6; ++a) {
      v[0] += phi[a] * f.coef[n[a]];
      v[1] += phi[a] * f.coef[s.num_p2() + n[a]];
    }
    return v;
  }
  const auto n1 = s.p1_nodes(e);
  return {l[0] * f.coef[n1[0]] + l[1] * f.coef[n1[1]] + l[2] * f.coef[n1[2]], 0.0};
}

Field prolongate(const Field& coarse, SpacePtr fine) {
  const auto& c = *coarse.space;
  if (fine->nx() % c.nx() != 0 || fine->ny() % c.ny() != 0)
    throw std::invalid_argument("prolongate: meshes are not nested");
  if (coarse.role == Role::velocity)
    return interpolate_velocity(fine, [&](double x, double y) { return evaluate(coarse, x, y); });
  return interpolate_scalar(fine, [&](double x, double y) { return evaluate(coarse, x, y)[0]; },
                            coarse.role);
}

VelocityQp eval_velocity_qp(const Field& u) {
  if (u.role != Role::velocity) throw std::invalid_argument("eval_velocity_qp: velocity field required");
  const auto& s = *u.space;
  const int nq = s.qp_per_element();
  const int np2 = s.num_p2();
  VelocityQp r;
  r.resize(s.num_qp());
  for (int e = 0; e < s.num_elements(); ++e) {
    const auto& n = s.p2_nodes(e);
    double c0[6], c1[6];
    for (int a = 0; a < 6; ++a) {
      c0[a] = u.coef[n[a]];
      c1[a] = u.coef[np2 + n[a]];
    }
    for (int k = 0; k < nq; ++k) {
      const std::size_t q = static_cast<std::size_t>(e) * nq + k;
      double v0 = 0, v1 = 0, a00 = 0, a01 = 0, a10 = 0, a11 = 0;
      for (int a = 0; a < 6; ++a) {
        const double ph = s.phi2(k, a);
        const auto g = s.grad_phi2(e, k, a);
        v0 += ph * c0[a];
        v1 += ph * c1[a];
        a00 += g[0] * c0[a];
        a01 += g[1] * c0[a];
        a10 += g[0] * c1[a];
        a11 += g[1] * c1[a];
      }
      r.u0[q] = v0;
      r.u1[q] = v1;
      r.g00[q] = a00;
      r.g01[q] = a01;
      r.g10[q] = a10;
      r.g11[q] = a11;
    }
  }
  return r;
}

ScalarQp eval_scalar_qp(const Field& f) {
  if (f.role == Role::velocity) throw std::invalid_argument("eval_scalar_qp: scalar field required");
  const auto& s = *f.space;
  const int nq = s.qp_per_element();
  ScalarQp r;
  r.resize(s.num_qp());
  for (int e = 0; e < s.num_elements(); ++e) {
    const auto n1 = s.p1_nodes(e);
    double gx = 0.0, gy = 0.0;
    for (int a = 0; a < 3; ++a) {
      const auto g = s.grad_phi1(e, a);
      gx += g[0] * f.coef[n1[a]];
      gy += g[1] * f.coef[n1[a]];
    }
    for (int k = 0; k < nq; ++k) {
      const std::size_t q = static_cast<std::size_t>(e) * nq + k;
      double v = 0.0;
      for (int a = 0; a < 3; ++a) v += s.phi1(k, a) * f.coef[n1[a]];
      r.v[q] = v;
      r.dx[q] = gx;
      r.dy[q] = gy;
    }
  }
  return r;
}

namespace {

double lp_from_magnitudes(std::vector<double>& mag, const std::vector<double>& w, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("norm: exponent p >= 1 required");
  const double sum = kernels::weighted_power_sum(mag, w, p);
  return std::pow(sum, 1.0 / p);
}

std::vector<double> grad_magnitudes(const VelocityQp& v) {
  std::vector<double> m(v.g00.size());
  kernels::full_norm2(v.g00, v.g01, v.g10, v.g11, m);
  return m;
}

std::vector<double> sym_magnitudes(const VelocityQp& v) {
  std::vector<double> off(v.g00.size()), m(v.g00.size());
  for (std::size_t i = 0; i < off.size(); ++i) off[i] = 0.5 * (v.g01[i] + v.g10[i]);
  kernels::sym_norm2(v.g00, off, v.g11, m);
  return m;
}

}  // namespace

double norm_Lp(const Field& f, double p) {
  const auto& w = f.space->qp_w();
  std::vector<double> mag(w.size());
  if (f.role == Role::velocity) {
    const auto v = eval_velocity_qp(f);
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(v.u0[i], v.u1[i]);
  } else {
    const auto v = eval_scalar_qp(f);
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(v.v[i]);
  }
  return lp_from_magnitudes(mag, w, p);
}

double norm_grad_p(const Field& u, double p) {
  auto m = grad_magnitudes(eval_velocity_qp(u));
  return lp_from_magnitudes(m, u.space->qp_w(), p);
}

double norm_sym_grad_p(const Field& u, double p) {
  auto m = sym_magnitudes(eval_velocity_qp(u));
  return lp_from_magnitudes(m, u.space->qp_w(), p);
}

double norm_div_p(const Field& u, double p) {
  const auto v = eval_velocity_qp(u);
  std::vector<double> m(v.g00.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(v.g00[i] + v.g11[i]);
  return lp_from_magnitudes(m, u.space->qp_w(), p);
}

double norm_W1p(const Field& u, double p) {
  const double a = norm_Lp(u, p), b = norm_grad_p(u, p);
  return std::pow(std::pow(a, p) + std::pow(b, p), 1.0 / p);
}

double norm_shifted_sym_grad_p(const Field& u, double delta, double p) {
  auto m = sym_magnitudes(eval_velocity_qp(u));
  for (double& x : m) x += delta;
  return lp_from_magnitudes(m, u.space->qp_w(), p);
}

double error_L2(const Field& u, const VectorFn& fn) {
  const auto& s = *u.space;
  const auto v = eval_velocity_qp(u);
  double acc = 0.0;
  for (int q = 0; q < s.num_qp(); ++q) {
    const auto ex = fn(s.qp_x()[q], s.qp_y()[q]);
    const double a = v.u0[q] - ex[0], b = v.u1[q] - ex[1];
    acc += s.qp_w()[q] * (a * a + b * b);
  }
  return std::sqrt(acc);
}

double error_L2(const Field& f, const ScalarFn& fn) {
  const auto& s = *f.space;
  const auto v = eval_scalar_qp(f);
  double acc = 0.0;
  for (int q = 0; q < s.num_qp(); ++q) {
    const double d = v.v[q] - fn(s.qp_x()[q], s.qp_y()[q]);
    acc += s.qp_w()[q] * d * d;
  }
  return std::sqrt(acc);
}

Eigen::VectorXd assemble_velocity_functional(const DiscreteSpace& s, const VelocityQp& c) {
  const int nq = s.qp_per_element();
  const int np2 = s.num_p2();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(s.num_velocity());
  for (int e = 0; e < s.num_elements(); ++e) {
    const auto& n = s.p2_nodes(e);
    double l0[6] = {}, l1[6] = {};
    for (int k = 0; k < nq; ++k) {
      const std::size_t q = static_cast<std::size_t>(e) * nq + k;
      const double w = s.qp_w()[q];
      for (int a = 0; a < 6; ++a) {
        const auto g = s.grad_phi2(e, k, a);
        const double ph = s.phi2(k, a);
        l0[a] += w * (c.u0[q] * ph + c.g00[q] * g[0] + c.g01[q] * g[1]);
        l1[a] += w * (c.u1[q] * ph + c.g10[q] * g[0] + c.g11[q] * g[1]);
      }
    }
    for (int a = 0; a < 6; ++a) {
      r[n[a]] += l0[a];
      r[np2 + n[a]] += l1[a];
    }
  }
  return r;
}

Field discrete_divergence(const Field& u) {
  if (u.role != Role::velocity) throw std::invalid_argument("discrete_divergence: velocity field required");
  Field d = Field::zeros(u.space, Role::scalar);
  d.coef = solve_p1_mass(*u.space, u.space->divergence() * u.coef);
  return d;
}

double mean(const Field& s) {
  return s.space->p1_integrals().dot(s.coef) / s.space->domain().area();
}

void remove_mean(Field& p) { p.coef.array() -= mean(p); }

void set_boundary(Field& u, const VectorFn& fn) {
  const auto& s = *u.space;
  const int np2 = s.num_p2();
  for (int n = 0; n < np2; ++n) {
    if (!s.boundary_p2(n)) continue;
    const auto x = s.p2_coord(n);
    const auto v = fn(x[0], x[1]);
    u.coef[n] = v[0];
    u.coef[np2 + n] = v[1];
  }
}

void zero_boundary(Field& u) {
  const auto& fi = u.space->free_index();
  for (int k = 0; k < u.coef.size(); ++k)
    if (fi[k] < 0) u.coef[k] = 0.0;
}

Eigen::VectorXd restrict_free(const Field& u) {
  const auto& fd = u.space->free_dofs();
  Eigen::VectorXd r(fd.size());
  for (std::size_t k = 0; k < fd.size(); ++k) r[k] = u.coef[fd[k]];
  return r;
}

Field extend_free(SpacePtr space, const Eigen::VectorXd& values) {
  Field u = Field::zeros(space, Role::velocity);
  const auto& fd = space->free_dofs();
  if (values.size() != static_cast<Eigen::Index>(fd.size()))
    throw std::invalid_argument("extend_free: size mismatch");
  for (std::size_t k = 0; k < fd.size(); ++k) u.coef[fd[k]] = values[k];
  return u;
}

// ---------------------------------------------------------------------------
// IO

namespace {

nlohmann::ordered_json header_json(const DiscreteSpace& s) {
  nlohmann::ordered_json j;
  j["domain"] = {{"x0", s.domain().x0}, {"y0", s.domain().y0}, {"x1", s.domain().x1},
                 {"y1", s.domain().y1}, {"dim", s.domain().dim}};
  j["nx"] = s.nx();
  j["ny"] = s.ny();
  j["elements"] = s.num_elements();
  j["velocity_space"] = "P2";
  j["pressure_space"] = "P1";
  j["velocity_dofs"] = s.num_velocity();
  j["pressure_dofs"] = s.num_p1();
  j["free_velocity_dofs"] = s.num_free();
  j["quadrature_points_per_element"] = s.qp_per_element();
  j["inf_sup"] = s.inf_sup();
  return j;
}

const char* role_name(Role r) {
  switch (r) {
    case Role::velocity: return "velocity";
    case Role::pressure: return "pressure";
    case Role::scalar: return "scalar";
  }
  return "scalar";
}

}  // namespace

std::string space_header(const DiscreteSpace& s) { return header_json(s).dump(); }

void write_field(const Field& f, const std::string& path, const std::string& name) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_field: cannot open " + path);
  const auto& s = *f.space;
  nlohmann::ordered_json h;
  h["name"] = name;
  h["role"] = role_name(f.role);
  h["space"] = header_json(s);
  const bool vel = f.role == Role::velocity;
  h["grid"] = vel ? nlohmann::ordered_json{{"nodes_x", 2 * s.nx() + 1}, {"nodes_y", 2 * s.ny() + 1}}
                  : nlohmann::ordered_json{{"nodes_x", s.nx() + 1}, {"nodes_y", s.ny() + 1}};
  h["columns"] = vel ? nlohmann::json::array({"x", "y", "u0", "u1"})
                     : nlohmann::json::array({"x", "y", "value"});
  out << h.dump() << '\n';
  char buf[128];
  if (vel) {
    for (int n = 0; n < s.num_p2(); ++n) {
      const auto x = s.p2_coord(n);
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", x[0], x[1], f.coef[n],
                    f.coef[s.num_p2() + n]);
      out << buf;
    }
  } else {
    for (int v = 0; v < s.num_p1(); ++v) {
      const auto x = s.p1_coord(v);
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", x[0], x[1], f.coef[v]);
      out << buf;
    }
  }
}

Field read_field(SpacePtr space, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_field: cannot open " + path);
  std::string line;
  std::getline(in, line);
  const auto h = nlohmann::json::parse(line);
  if (h.at("space").at("nx") != space->nx() || h.at("space").at("ny") != space->ny())
    throw std::invalid_argument("read_field: mesh mismatch");
  const std::string role = h.at("role");
  const Role r = role == "velocity" ? Role::velocity : role == "pressure" ? Role::pressure : Role::scalar;
  Field f = Field::zeros(space, r);
  const int rows = r == Role::velocity ? space->num_p2() : space->num_p1();
  for (int k = 0; k < rows; ++k) {
    double x, y, a, b = 0.0;
    if (!(in >> x >> y >> a)) throw std::runtime_error("read_field: truncated file");
    if (r == Role::velocity) {
      if (!(in >> b)) throw std::runtime_error("read_field: truncated file");
      f.coef[k] = a;
      f.coef[space->num_p2() + k] = b;
    } else {
      f.coef[k] = a;
    }
  }
  return f;
}

}  // namespace shearlab
