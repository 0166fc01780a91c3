#pragma once

// Symmetric Kähler metrics reduced to one-dimensional profiles.
//
// Conventions: Kähler Laplacian Delta = g^{ij} d_i d_j (half the Riemannian
// one), |grad f|^2 = g^{ij} d_i f d_j f, s = g^{ij} R_ij. The class is fixed
// so that Ric = g at the fixed point: round CP1 is the unit sphere (V = 4 pi),
// F1 has moment interval [1, 3] and V = 16 pi^2.
//
// Every backend exposes, at each node xi, the profile data
//   density(xi)  : dv = density * dxi   (angular directions integrated out)
//   tderiv(xi)   : d/dt = tderiv * d/dxi, t the real part of the log
//                  coordinate of the symmetry C*-action
//   moment(xi)   : Theta = d(moment map)/dt = g(d_t, d_t)
// from which all first-order quantities follow: for f = F(xi) e^{i m angle},
// |d-bar f|^2 = |tderiv F' - m F|^2 / (2 Theta).

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ricci_lab/quadrature.hpp"

namespace rlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class BackendKind { kCp1Conformal, kF1Momentum };

/// Holomorphic vector field of the symmetric basis, written as
/// X = h(t) e^{i mode angle} d_w with h = e^{mode t}.
struct HolomorphicField {
  int mode;
  std::string name;
};

struct Backend {
  BackendKind kind = BackendKind::kCp1Conformal;
  int n = 1;  // complex dimension
  double lo = -1.0;
  double hi = 1.0;
  double class_volume = 0.0;
  std::vector<HolomorphicField> basis;

  static Backend cp1();
  static Backend f1();

  int h0_dim() const { return static_cast<int>(basis.size()); }
  std::string name() const;
  /// Largest |mode| for which function / vector-field spectra are supported.
  int max_supported_mode() const;
  /// Canonical moment profile Theta_0 at coordinate xi.
  double reference_profile(double xi) const;
};

Backend backend_from_name(const std::string& name);

class Grid {
 public:
  Grid(Backend backend, int n);

  const Backend& backend() const { return backend_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const Vec& nodes() const { return nodes_; }
  const Vec& weights() const { return weights_; }
  /// Nodes mapped back to the reference interval [-1, 1].
  const Vec& reference_nodes() const { return ref_.nodes; }
  const Vec& barycentric() const { return bary_; }
  const Mat& diff() const { return d1_; }
  const Mat& diff2() const { return d2_; }
  /// Nodal f -> nodal int_{lo}^{xi} f.
  const Mat& antiderivative() const { return int_; }
  /// Nodal values -> Legendre coefficients.
  const Mat& legendre() const { return leg_; }

  double interpolate(const Vec& values, double xi) const;
  Mat interpolation_to(const Vec& targets) const;

 private:
  Backend backend_;
  quadrature::GaussLegendre ref_;
  Vec nodes_, weights_, bary_;
  Mat d1_, d2_, int_, leg_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(const Backend& backend, int n);

/// Complex samples of F(xi) e^{i mode angle}; mode 0 fields are real.
struct Field {
  int mode = 0;
  Vec re;
  Vec im;

  static Field real(Vec values, int mode = 0);
  Eigen::Index size() const { return re.size(); }
};

/// A metric in the fixed class, encoded by a potential on the grid:
/// CP1: Kähler potential phi relative to the round metric (g = rho g_round,
/// rho = 1 + Delta_round phi); F1: second derivative psi'' of the symplectic
/// potential relative to the reference profile (1/Theta = 1/Theta_0 + psi''),
/// which also quotients out the affine gauge of psi.
class MetricState {
 public:
  /// Throws ErrorCode::kPositivity naming the first failing node.
  static MetricState from_potential(GridPtr grid, Vec phi, double t = 0.0);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Backend& backend() const { return grid_->backend(); }
  const Vec& phi() const { return phi_; }
  double time() const { return t_; }
  MetricState at_time(double t) const;

  const Vec& density() const { return density_; }
  const Vec& tderiv() const { return tderiv_; }
  const Vec& moment() const { return moment_; }
  /// Conformal factor rho for CP1; Theta / Theta_0 for F1.
  const Vec& conformal() const { return conformal_; }

  /// Quadrature of f against dv.
  double integral(const Vec& f) const;
  /// Kähler Laplacian on mode-0 functions, as a matrix acting on nodal values.
  Mat laplacian_matrix() const;
  Vec laplacian(const Vec& f) const;
  /// |grad f|^2 for real mode-0 f.
  Vec grad_sq(const Vec& f) const;
  /// d f / dt for mode-0 f.
  Vec t_derivative(const Vec& f) const;

  std::uint64_t hash() const;

 private:
  MetricState() = default;
  GridPtr grid_;
  Vec phi_;
  double t_ = 0.0;
  Vec density_, tderiv_, moment_, conformal_;
};

struct MetricDescriptor {
  enum class Kind { kCanonical, kPerturbed };
  Kind kind = Kind::kCanonical;
  double amplitude = 0.0;
  int mode_index = 2;

  static MetricDescriptor canonical() { return {}; }
  static MetricDescriptor perturbed(double amplitude, int mode_index) {
    return {Kind::kPerturbed, amplitude, mode_index};
  }
};

enum class Weight { kDv, kExpMinusU, kExpTheta };

MetricState initial_metric(const GridPtr& grid, const MetricDescriptor& descriptor);

/// Adds amplitude * P_k to the potential (P_k the Legendre polynomial in the
/// reference coordinate, k = mode_index >= 2); on F1 to psi, i.e. P_k'' to
/// the stored psi''.
MetricState perturb_metric(const MetricState& state, double amplitude, int mode_index);

Field scalar_curvature(const MetricState& state);

double volume(const MetricState& state);

/// Quadrature of a field against the weighted volume form. Non-zero Fourier
/// modes integrate to zero over the angle.
double integrate(const Field& field, const MetricState& state, Weight weight = Weight::kDv,
                 const Field* u = nullptr, const Field* theta = nullptr);

/// |grad f|^2 (Kähler convention) for f = F e^{i m angle}; returns a mode-0 field.
Field grad_norm_sq(const Field& f, const MetricState& state);

}  // namespace rlab
