#include "shearlab/embedding.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "shearlab/random.hpp"

namespace shearlab {

double critical_exponent(double p, int d) {
  if (p >= d) return std::numeric_limits<double>::infinity();
  return p * d / (d - p);
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Restriction of a full velocity matrix/vector to a dof subset.
struct Subspace {
  std::vector<int> dofs;   // subspace index -> velocity dof
  std::vector<int> index;  // velocity dof -> subspace index or -1

  static Subspace make(const DiscreteSpace& s, bool zero_boundary) {
    Subspace sub;
    if (zero_boundary) {
      sub.dofs = s.free_dofs();
      sub.index = s.free_index();
    } else {
      sub.dofs.resize(s.num_velocity());
      sub.index.resize(s.num_velocity());
      for (int k = 0; k < s.num_velocity(); ++k) sub.dofs[k] = sub.index[k] = k;
    }
    return sub;
  }
  int size() const { return static_cast<int>(dofs.size()); }
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r(size());
    for (int k = 0; k < size(); ++k) r[k] = full[dofs[k]];
    return r;
  }
  Field extend(const SpacePtr& space, const Eigen::VectorXd& c) const {
    Field f = Field::zeros(space, Role::velocity);
    for (int k = 0; k < size(); ++k) f.coef[dofs[k]] = c[k];
    return f;
  }
  SpMat restrict(const SpMat& m) const {
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it) {
        const int i = index[it.row()], j = index[it.col()];
        if (i >= 0 && j >= 0) t.emplace_back(i, j, it.value());
      }
    SpMat r(size(), size());
    r.setFromTriplets(t.begin(), t.end());
    return r;
  }
};

SpMat block_diag2(const SpMat& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<Eigen::Triplet<double>> t;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      for (int c = 0; c < 2; ++c) t.emplace_back(c * n + it.row(), c * n + it.col(), it.value());
  SpMat r(2 * n, 2 * n);
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

// int Du : Dv over all velocity dofs.
SpMat sym_grad_matrix(const DiscreteSpace& s) {
  const int nq = s.qp_per_element();
  const int np2 = s.num_p2();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(s.num_elements()) * 144);
  for (int e = 0; e < s.num_elements(); ++e) {
    const auto& n = s.p2_nodes(e);
    double loc[12][12] = {};
    for (int k = 0; k < nq; ++k) {
      const double w = s.qp_w()[static_cast<std::size_t>(e) * nq + k];
      std::array<std::array<double, 2>, 6> g;
      for (int a = 0; a < 6; ++a) g[a] = s.grad_phi2(e, k, a);
      for (int c = 0; c < 2; ++c)
        for (int a = 0; a < 6; ++a)
          for (int d = 0; d < 2; ++d)
            for (int b = 0; b < 6; ++b) {
              double v = g[a][d] * g[b][c];
              if (c == d) v += g[a][0] * g[b][0] + g[a][1] * g[b][1];
              loc[c * 6 + a][d * 6 + b] += 0.5 * w * v;
            }
    }
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j)
        t.emplace_back((i / 6) * np2 + n[i % 6], (j / 6) * np2 + n[j % 6], loc[i][j]);
  }
  SpMat r(2 * np2, 2 * np2);
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

enum class Term { value, grad, sym, w1, linear };

// Norm of u for the given term, and its gradient with respect to all velocity dofs.
double norm_with_gradient(const Field& u, Term term, double p, const Eigen::VectorXd* load,
                          Eigen::VectorXd& grad) {
  const auto& s = *u.space;
  if (term == Term::linear) {
    grad = *load;
    return load->dot(u.coef);
  }
  const auto v = eval_velocity_qp(u);
  const std::size_t nq = v.u0.size();
  const auto& w = s.qp_w();
  VelocityQp c;
  c.resize(nq);
  double integral = 0.0;
  // one pow per point: m^p = m^(p-2) m^2
  auto weight = [p](double m) { return m > 0.0 ? std::pow(m, p - 2.0) : 0.0; };
  for (std::size_t q = 0; q < nq; ++q) {
    if (term == Term::value || term == Term::w1) {
      const double m2 = v.u0[q] * v.u0[q] + v.u1[q] * v.u1[q];
      const double k = weight(std::sqrt(m2));
      integral += w[q] * k * m2;
      c.u0[q] = k * v.u0[q];
      c.u1[q] = k * v.u1[q];
    }
    if (term == Term::grad || term == Term::w1) {
      const double m2 = v.g00[q] * v.g00[q] + v.g01[q] * v.g01[q] + v.g10[q] * v.g10[q] +
                        v.g11[q] * v.g11[q];
      const double k = weight(std::sqrt(m2));
      integral += w[q] * k * m2;
      c.g00[q] = k * v.g00[q];
      c.g01[q] = k * v.g01[q];
      c.g10[q] = k * v.g10[q];
      c.g11[q] = k * v.g11[q];
    }
    if (term == Term::sym) {
      const double off = 0.5 * (v.g01[q] + v.g10[q]);
      const double m2 = v.g00[q] * v.g00[q] + 2.0 * off * off + v.g11[q] * v.g11[q];
      const double k = weight(std::sqrt(m2));
      integral += w[q] * k * m2;
      c.g00[q] = k * v.g00[q];
      c.g01[q] = k * off;
      c.g10[q] = k * off;
      c.g11[q] = k * v.g11[q];
    }
  }
  const double n = std::pow(integral, 1.0 / p);
  grad = assemble_velocity_functional(s, c);
  if (n > 0.0) grad *= std::pow(n, 1.0 - p);
  return n;
}

struct RatioProblem {
  Term num;
  double num_p;
  Term den;
  double den_p;
  const Eigen::VectorXd* load = nullptr;
};

struct AscentState {
  Eigen::VectorXd c;  // subspace coefficients, normalized so that den = 1
  double j = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

class RatioMaximizer {
 public:
  RatioMaximizer(SpacePtr space, RatioProblem prob, bool zero_boundary)
      : space_(std::move(space)), prob_(prob), sub_(Subspace::make(*space_, zero_boundary)) {
    const SpMat h = sub_.restrict(
        SpMat(block_diag2(space_->stiffness_p2()) + block_diag2(space_->mass_p2())));
    h_ = h;
    riesz_.compute(h_);
    if (riesz_.info() != Eigen::Success) throw std::runtime_error("ratio ascent: Riesz map failed");
  }

  const Subspace& sub() const { return sub_; }
  Eigen::VectorXd smooth(const Eigen::VectorXd& r) const { return riesz_.solve(r); }

  // J = log N - log D, with gradient restricted to the subspace.
  double objective(const Eigen::VectorXd& c, Eigen::VectorXd* grad) const {
    const Field u = sub_.extend(space_, c);
    Eigen::VectorXd gn, gd;
    const double n = norm_with_gradient(u, prob_.num, prob_.num_p, prob_.load, gn);
    const double d = norm_with_gradient(u, prob_.den, prob_.den_p, nullptr, gd);
    if (!(n > 0.0) || !(d > 0.0)) return -std::numeric_limits<double>::infinity();
    if (grad) *grad = sub_.restrict(gn) / n - sub_.restrict(gd) / d;
    return std::log(n) - std::log(d);
  }

  AscentState run(Eigen::VectorXd c, int iters, double tol) const {
    AscentState st;
    Eigen::VectorXd g;
    st.j = objective(c, &g);
    if (!std::isfinite(st.j)) {
      st.c = c;
      return st;
    }
    double t = 1.0;
    int quiet = 0;
    for (int it = 0; it < iters; ++it) {
      st.iterations = it + 1;
      const Eigen::VectorXd dir = riesz_.solve(g);
      const double slope = g.dot(dir);
      if (!(slope > 0.0)) {
        st.converged = true;
        break;
      }
      const double scale = std::sqrt(c.dot(h_ * c) / std::max(dir.dot(h_ * dir), 1e-300));
      bool moved = false;
      for (int bt = 0; bt < 40 && t > 1e-14; ++bt) {
        Eigen::VectorXd cn = c + (t * scale) * dir;
        Eigen::VectorXd gn;
        const double jn = objective(cn, &gn);
        if (std::isfinite(jn) && jn >= st.j + 1e-4 * t * scale * slope) {
          const double gain = jn - st.j;
          c = cn;
          g = gn;
          st.j = jn;
          moved = true;
          t = std::min(1.0, 2.0 * t);
          quiet = gain <= tol * std::max(1.0, std::abs(st.j)) ? quiet + 1 : 0;
          break;
        }
        t *= 0.5;
      }
      if (!moved || quiet >= 3) {
        st.converged = true;
        break;
      }
      c /= c.norm();
    }
    st.c = c;
    return st;
  }

 private:
  SpacePtr space_;
  RatioProblem prob_;
  Subspace sub_;
  SpMat h_;
  Eigen::SimplicialLDLT<SpMat> riesz_;
};

RatioEstimate maximize(const SpacePtr& space, RatioProblem prob, bool zero_boundary,
                       const AscentOptions& opts, std::vector<Eigen::VectorXd> extra_starts) {
  RatioMaximizer m(space, prob, zero_boundary);
  const auto& sub = m.sub();
  std::vector<Eigen::VectorXd> starts = std::move(extra_starts);
  if (opts.warm_start) starts.push_back(sub.restrict(prolongate(*opts.warm_start, space).coef));
  Rng rng(opts.seed);
  for (int k = 0; k < opts.starts; ++k) {
    Eigen::VectorXd r(sub.size());
    for (int i = 0; i < sub.size(); ++i) r[i] = rng.normal();
    // alternate smooth and rough starts
    starts.push_back(k % 2 == 0 ? m.smooth(r) : r);
  }
  RatioEstimate best;
  best.value = 0.0;
  best.witness = Field::zeros(space, Role::velocity);
  double best_j = -std::numeric_limits<double>::infinity();
  bool all_converged = true;
  for (auto& c0 : starts) {
    if (c0.norm() == 0.0) continue;
    const AscentState st = m.run(c0 / c0.norm(), opts.iters, opts.tol);
    all_converged = all_converged && st.converged;
    best.iterations += st.iterations;
    if (st.j > best_j) {
      best_j = st.j;
      best.witness = sub.extend(space, st.c);
    }
  }
  best.value = std::isfinite(best_j) ? std::exp(best_j) : 0.0;
  best.converged = all_converged;
  return best;
}

}  // namespace

RatioEstimate estimate_korn(const SpacePtr& space, double p, const AscentOptions& opts) {
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("estimate_korn: p in (1, 2] required");
  if (p != 2.0)
    return maximize(space, {Term::grad, p, Term::sym, p}, true, opts, {});

  const Subspace sub = Subspace::make(*space, true);
  const SpMat a = sub.restrict(sym_grad_matrix(*space));
  const SpMat k = sub.restrict(block_diag2(space->stiffness_p2()));
  Eigen::SimplicialLDLT<SpMat> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("estimate_korn: singular Du form");
  Rng rng(opts.seed);
  Eigen::VectorXd x(sub.size());
  for (int i = 0; i < sub.size(); ++i) x[i] = rng.normal();
  if (opts.warm_start) {
    const Eigen::VectorXd w = sub.restrict(prolongate(*opts.warm_start, space).coef);
    if (w.norm() > 0.0) x = w + 1e-3 * (w.norm() / x.norm()) * x;
  }
  // Power iteration x <- A^{-1} K x accelerated by Lanczos in the A inner product.
  RatioEstimate r;
  const int kmax = std::min(std::max(opts.iters, 2), sub.size());
  std::vector<Eigen::VectorXd> basis;
  std::vector<double> alpha, beta;
  x /= std::sqrt(x.dot(a * x));
  double theta = 0.0;
  Eigen::VectorXd ritz;
  for (int j = 0; j < kmax; ++j) {
    basis.push_back(x);
    Eigen::VectorXd w = ldlt.solve(k * x);
    alpha.push_back(w.dot(a * x));
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : basis) w -= w.dot(a * v) * v;
    const double b = std::sqrt(std::max(w.dot(a * w), 0.0));
    const bool last = b <= 1e-14 * std::abs(alpha.back()) || j + 1 == kmax;
    r.iterations = j + 1;
    if ((j + 1) % 5 == 0 || last) {
      const int m = static_cast<int>(alpha.size());
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      const double next = es.eigenvalues()[m - 1];
      const Eigen::VectorXd y = es.eigenvectors().col(m - 1);
      ritz = Eigen::VectorXd::Zero(sub.size());
      for (int i = 0; i < m; ++i) ritz += y[i] * basis[i];
      const double residual = b * std::abs(y[m - 1]);
      const bool converged = residual <= opts.tol * next || std::abs(next - theta) <= 1e-14 * next;
      theta = next;
      if (converged) r.converged = true;
      if (converged || last) break;
    }
    beta.push_back(b);
    x = w / b;
  }
  // Report the Rayleigh quotient of the Ritz vector itself.
  r.value = std::sqrt(ritz.dot(k * ritz) / ritz.dot(a * ritz));
  r.witness = sub.extend(space, ritz);
  return r;
}

RatioEstimate estimate_sobolev(const SpacePtr& space, double from_p, double to_r,
                               const AscentOptions& opts, bool zero_boundary) {
  if (!(from_p >= 1.0) || !(to_r >= 1.0))
    throw std::invalid_argument("estimate_sobolev: exponents >= 1 required");
  const double ps = critical_exponent(from_p, space->domain().dim);
  if (to_r > ps)
    throw std::invalid_argument("estimate_sobolev: target exponent " + std::to_string(to_r) +
                                " exceeds the critical exponent " + std::to_string(ps));
  RatioProblem prob{Term::value, to_r, zero_boundary ? Term::grad : Term::w1, from_p};
  // constants are natural candidates on the full space
  std::vector<Eigen::VectorXd> extra;
  if (!zero_boundary) {
    Eigen::VectorXd one = Eigen::VectorXd::Zero(space->num_velocity());
    one.head(space->num_p2()).setOnes();
    extra.push_back(one);
  }
  return maximize(space, prob, zero_boundary, opts, std::move(extra));
}

RatioEstimate dual_norm(const SpacePtr& space, const Eigen::VectorXd& load, double p,
                        const AscentOptions& opts) {
  if (load.size() != space->num_velocity()) throw std::invalid_argument("dual_norm: load size");
  const Subspace sub = Subspace::make(*space, true);
  Eigen::VectorXd masked = Eigen::VectorXd::Zero(load.size());
  for (int d : sub.dofs) masked[d] = load[d];
  RatioEstimate r;
  r.witness = Field::zeros(space, Role::velocity);
  if (masked.norm() == 0.0) {
    r.converged = true;
    return r;
  }
  const SpMat a = sub.restrict(sym_grad_matrix(*space));
  Eigen::SimplicialLDLT<SpMat> ldlt(a);
  const Eigen::VectorXd riesz = ldlt.solve(sub.restrict(masked));
  if (p == 2.0) {
    r.value = std::sqrt(sub.restrict(masked).dot(riesz));
    r.witness = sub.extend(space, riesz);
    r.converged = true;
    return r;
  }
  AscentOptions o = opts;
  o.starts = 0;
  RatioProblem prob{Term::linear, 1.0, Term::sym, p, &masked};
  return maximize(space, prob, true, o, {riesz});
}

double EmbeddingConstants::c_sob() const {
  const double a = sob_p_to_pstar, b = sob_s_to_2pprime, c = sob_s_to_2sprime;
  return std::max({a * a, b * b, a * c});
}

EmbeddingConstants estimate_embeddings(const SpacePtr& space, double p, double s,
                                       const AscentOptions& opts) {
  EmbeddingConstants e;
  e.p = p;
  e.s = s;
  const double sprime = s / (s - 1.0);
  const double pprime = p / (p - 1.0);
  const RatioEstimate korn = estimate_korn(space, p, opts);
  const RatioEstimate a = estimate_sobolev(space, p, 2.0 * sprime, opts, true);
  const RatioEstimate b = estimate_sobolev(space, s, 2.0 * pprime, opts, false);
  const RatioEstimate c = estimate_sobolev(space, s, 2.0 * sprime, opts, false);
  e.korn_raw = korn.value;
  e.sob_a_raw = a.value;
  e.sob_b_raw = b.value;
  e.sob_c_raw = c.value;
  e.korn_p = std::max(1.0, korn.value);
  e.sob_p_to_pstar = std::max(1.0, a.value);
  e.sob_p_target = 2.0 * sprime;
  e.sob_s_to_2pprime = std::max(1.0, b.value);
  e.sob_s_to_2sprime = std::max(1.0, c.value);
  e.korn_witness = korn.witness;
  e.sob_a_witness = a.witness;
  e.sob_b_witness = b.witness;
  e.sob_c_witness = c.witness;
  e.converged = korn.converged && a.converged && b.converged && c.converged;
  return e;
}

}  // namespace shearlab
