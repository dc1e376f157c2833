#pragma once

// Structured triangulations of a rectangle with P2 velocity / P1 pressure
// (Taylor-Hood) spaces, quadrature-based norms and discrete divergence.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace shearlab {

struct RectDomain {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;
  int dim = 2;

  void validate() const;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle
/// {xi, eta >= 0, xi + eta <= 1}; n points per direction integrate total degree 2n - 2.
struct TriangleRule {
  std::vector<double> xi, eta, w;  // weights sum to 1/2
  int size() const { return static_cast<int>(w.size()); }
};
TriangleRule triangle_rule(int points_per_direction);

enum class Role { velocity, pressure, scalar };

struct SpaceOptions {
  int quad_points = 4;  // per direction; 4 -> exact for degree 6
  bool check_inf_sup = true;
};

using ScalarFn = std::function<double(double, double)>;
using VectorFn = std::function<std::array<double, 2>(double, double)>;

/// Quadrature-point values of a velocity field; g_ij = d u_i / d x_j.
struct VelocityQp {
  std::vector<double> u0, u1, g00, g01, g10, g11;
  void resize(std::size_t n);
};

struct ScalarQp {
  std::vector<double> v, dx, dy;
  void resize(std::size_t n);
};

class DiscreteSpace {
 public:
  /// nx, ny >= 2. Squares in the lower-left and upper-right quadrants are cut along
  /// the main diagonal, the others along the anti-diagonal, so no triangle has all
  /// three vertices on the boundary. For even nx, ny the (2nx, 2ny) mesh is nested.
  static std::shared_ptr<const DiscreteSpace> build(const RectDomain& domain, int nx, int ny,
                                                    const SpaceOptions& opts = {});
  std::shared_ptr<const DiscreteSpace> refined() const;
  /// Same mesh with another quadrature rule (dof layouts are identical).
  std::shared_ptr<const DiscreteSpace> with_quadrature(int quad_points) const;

  const RectDomain& domain() const { return domain_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return (domain_.x1 - domain_.x0) / nx_; }
  double hy() const { return (domain_.y1 - domain_.y0) / ny_; }
  double h() const;

  int num_elements() const { return 2 * nx_ * ny_; }
  int num_p1() const { return (nx_ + 1) * (ny_ + 1); }
  int num_p2() const { return (2 * nx_ + 1) * (2 * ny_ + 1); }
  int num_velocity() const { return 2 * num_p2(); }
  int num_dofs(Role r) const { return r == Role::velocity ? num_velocity() : num_p1(); }

  /// P2 nodes: v0, v1, v2, m01, m12, m20 (local); global index I + (2nx+1) J on the half lattice.
  const std::array<int, 6>& p2_nodes(int e) const { return p2_[e]; }
  /// P1 vertices of element e (counter-clockwise); global index i + (nx+1) j.
  std::array<int, 3> p1_nodes(int e) const;
  std::array<double, 2> p2_coord(int node) const;
  std::array<double, 2> p1_coord(int vertex) const;
  /// P1 vertex index of the P2 node sitting on a vertex, -1 for midpoints.
  int p2_to_p1(int node) const;

  bool boundary_p2(int node) const { return boundary_[node] != 0; }
  /// Velocity dof -> index among free (interior) dofs, or -1.
  const std::vector<int>& free_index() const { return free_index_; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  int num_free() const { return static_cast<int>(free_dofs_.size()); }

  // Quadrature data, element-major: point k of element e is e * qp_per_element() + k.
  int qp_per_element() const { return rule_.size(); }
  int num_qp() const { return num_elements() * rule_.size(); }
  const std::vector<double>& qp_x() const { return qx_; }
  const std::vector<double>& qp_y() const { return qy_; }
  const std::vector<double>& qp_w() const { return qw_; }
  const TriangleRule& rule() const { return rule_; }
  /// Reference basis tables at the rule's points.
  double phi2(int k, int a) const { return phi2_[k * 6 + a]; }
  double phi1(int k, int a) const { return phi1_[k * 3 + a]; }
  /// Physical P2 gradients at (element, point).
  std::array<double, 2> grad_phi2(int e, int k, int a) const;
  std::array<double, 2> grad_phi1(int e, int a) const;
  /// Inverse Jacobian (row-major) and |det J| of element e.
  const std::array<double, 4>& jinv(int e) const { return jinv_[e]; }
  double det(int e) const { return det_[e]; }

  /// Element containing (x, y) and its barycentric coordinates.
  int locate(double x, double y, std::array<double, 3>& lambda) const;

  // Global matrices (cached on construction).
  const Eigen::SparseMatrix<double>& mass_p1() const { return m1_; }
  const Eigen::SparseMatrix<double>& mass_p2() const { return m2_; }
  const Eigen::SparseMatrix<double>& stiffness_p2() const { return k2_; }
  /// B(k, c * nP2 + a) = int psi_k d_c phi_a.
  const Eigen::SparseMatrix<double>& divergence() const { return b_; }
  /// int psi_k for each P1 basis function.
  const Eigen::VectorXd& p1_integrals() const { return p1int_; }

  /// Discrete inf-sup constant of the zero-boundary velocity / mean-zero pressure pair.
  double inf_sup() const { return inf_sup_; }
  /// Recomputes the inf-sup constant; at most `iterations` shift-invert Lanczos steps on the Schur complement.
  double compute_inf_sup(int iterations = 200) const;

 private:
  DiscreteSpace() = default;
  void setup(const RectDomain& d, int nx, int ny, const SpaceOptions& opts);
  void assemble();

  RectDomain domain_;
  int nx_ = 0;
  int ny_ = 0;
  SpaceOptions opts_;
  std::vector<std::array<int, 6>> p2_;
  std::vector<char> boundary_;
  std::vector<int> free_index_, free_dofs_;
  std::vector<std::array<double, 4>> jinv_;
  std::vector<double> det_;
  TriangleRule rule_;
  std::vector<double> phi2_, dphi2_, phi1_;
  std::vector<double> qx_, qy_, qw_;
  Eigen::SparseMatrix<double> m1_, m2_, k2_, b_;
  Eigen::VectorXd p1int_;
  double inf_sup_ = 0.0;
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

struct Field {
  SpacePtr space;
  Role role = Role::velocity;
  Eigen::VectorXd coef;

  static Field zeros(SpacePtr space, Role role);
  Field rebind(SpacePtr other) const;
  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
};

/// Nodal interpolation.
Field interpolate_velocity(SpacePtr space, const VectorFn& fn);
Field interpolate_scalar(SpacePtr space, const ScalarFn& fn, Role role = Role::scalar);
/// L2 projection of fn onto the P1 space (quadrature of fn on the space's rule).
Field project_scalar(SpacePtr space, const ScalarFn& fn, Role role = Role::scalar);
/// Exact evaluation of a coarse field on a nested finer space.
Field prolongate(const Field& coarse, SpacePtr fine);

/// Point evaluation; velocity returns both components, scalar fields use [0].
std::array<double, 2> evaluate(const Field& f, double x, double y);

VelocityQp eval_velocity_qp(const Field& u);
ScalarQp eval_scalar_qp(const Field& s);

double norm_Lp(const Field& f, double p);
double norm_grad_p(const Field& u, double p);
double norm_sym_grad_p(const Field& u, double p);
double norm_div_p(const Field& u, double p);
/// (||u||_p^p + ||grad u||_p^p)^(1/p).
double norm_W1p(const Field& u, double p);
/// || |Du| + delta ||_p.
double norm_shifted_sym_grad_p(const Field& u, double delta, double p);

/// ||f_h - fn||_{L2}, with fn evaluated at the space's quadrature points.
double error_L2(const Field& u, const VectorFn& fn);
double error_L2(const Field& s, const ScalarFn& fn);

/// Vector over all velocity dofs: sum_q w_q [c.u0 phi_0 + c.u1 phi_1 + sum_ij c.g_ij d_j phi_i]
/// for the basis fields phi; `c` holds per-quadrature-point coefficients.
Eigen::VectorXd assemble_velocity_functional(const DiscreteSpace& s, const VelocityQp& c);

/// Pressure-space L2 projection of div u.
Field discrete_divergence(const Field& u);

/// Subtracts the mean of a P1 field.
void remove_mean(Field& pressure);
double mean(const Field& s);

/// Boundary dofs of u set from fn (nodal interpolation on the boundary only).
void set_boundary(Field& u, const VectorFn& fn);
/// Velocity field vanishing on the boundary: coefficients outside free dofs zeroed.
void zero_boundary(Field& u);
Eigen::VectorXd restrict_free(const Field& u);
Field extend_free(SpacePtr space, const Eigen::VectorXd& free_values);

/// JSON description of the mesh and spaces.
std::string space_header(const DiscreteSpace& space);
/// Text layout: first line is a JSON header, then one line per node "x y c0 [c1]".
void write_field(const Field& f, const std::string& path, const std::string& name);
Field read_field(SpacePtr space, const std::string& path);

}  // namespace shearlab
