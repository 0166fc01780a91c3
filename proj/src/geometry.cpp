#include "ricci_lab/geometry.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "ricci_lab/error.hpp"

namespace rlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMinNodes = 16;

// P_k'' = 3 C_{k-2}^{(5/2)}
double legendre_second_derivative(int k, double x) {
  if (k < 2) return 0.0;
  const double alpha = 2.5;
  double c0 = 1.0, c1 = 2.0 * alpha * x;
  if (k == 2) return 3.0 * c0;
  for (int j = 2; j <= k - 2; ++j) {
    const double c2 = (2.0 * x * (j + alpha - 1.0) * c1 - (j + 2.0 * alpha - 2.0) * c0) / j;
    c0 = c1;
    c1 = c2;
  }
  return 3.0 * c1;
}

}  // namespace

Backend Backend::cp1() {
  Backend b;
  b.kind = BackendKind::kCp1Conformal;
  b.n = 1;
  b.lo = -1.0;
  b.hi = 1.0;
  b.class_volume = 4.0 * kPi;
  // z d/dz, z^2 d/dz, d/dz in the log coordinate w = log z
  b.basis = {{0, "z*d/dz"}, {1, "z^2*d/dz"}, {-1, "d/dz"}};
  return b;
}

Backend Backend::f1() {
  Backend b;
  b.kind = BackendKind::kF1Momentum;
  b.n = 2;
  b.lo = 1.0;
  b.hi = 3.0;
  b.class_volume = 16.0 * kPi * kPi;
  // only the U(2)-invariant fiber rotation survives the reduction
  b.basis = {{0, "fiber C* generator"}};
  return b;
}

std::string Backend::name() const {
  return kind == BackendKind::kCp1Conformal ? "CP1_CONFORMAL" : "F1_MOMENTUM";
}

int Backend::max_supported_mode() const {
  return kind == BackendKind::kCp1Conformal ? 64 : 0;
}

double Backend::reference_profile(double xi) const {
  if (kind == BackendKind::kCp1Conformal) return 1.0 - xi * xi;
  return (xi - lo) * (hi - xi);
}

Backend backend_from_name(const std::string& name) {
  if (name == "CP1_CONFORMAL" || name == "CP1" || name == "cp1") return Backend::cp1();
  if (name == "F1_MOMENTUM" || name == "F1" || name == "f1") return Backend::f1();
  fail(ErrorCode::kInvalidArgument, "unknown backend '" + name + "'");
}

Grid::Grid(Backend backend, int n) : backend_(std::move(backend)) {
  if (n < kMinNodes) {
    fail(ErrorCode::kInvalidArgument,
         "make_grid: N = " + std::to_string(n) + " below minimum " + std::to_string(kMinNodes));
  }
  ref_ = quadrature::gauss_legendre(n);
  const double half = 0.5 * (backend_.hi - backend_.lo);
  const double mid = 0.5 * (backend_.hi + backend_.lo);
  nodes_ = (mid + half * ref_.nodes.array()).matrix();
  weights_ = half * ref_.weights;
  bary_ = quadrature::barycentric_weights(ref_.nodes);
  d1_ = quadrature::differentiation_matrix(ref_.nodes, bary_) / half;
  d2_ = d1_ * d1_;
  int_ = half * quadrature::integration_matrix(ref_);
  leg_ = quadrature::legendre_analysis(ref_);
}

double Grid::interpolate(const Vec& values, double xi) const {
  const double half = 0.5 * (backend_.hi - backend_.lo);
  const double mid = 0.5 * (backend_.hi + backend_.lo);
  return quadrature::interpolate(ref_.nodes, bary_, values, (xi - mid) / half);
}

Mat Grid::interpolation_to(const Vec& targets) const {
  const double half = 0.5 * (backend_.hi - backend_.lo);
  const double mid = 0.5 * (backend_.hi + backend_.lo);
  const Vec ref_targets = ((targets.array() - mid) / half).matrix();
  return quadrature::interpolation_matrix(ref_.nodes, bary_, ref_targets);
}

GridPtr make_grid(const Backend& backend, int n) {
  return std::make_shared<const Grid>(backend, n);
}

Field Field::real(Vec values, int mode) {
  Field f;
  f.mode = mode;
  f.im = Vec::Zero(values.size());
  f.re = std::move(values);
  return f;
}

MetricState MetricState::from_potential(GridPtr grid, Vec phi, double t) {
  if (!grid) fail(ErrorCode::kInvalidArgument, "MetricState: null grid");
  if (phi.size() != grid->size())
    fail(ErrorCode::kInvalidArgument, "MetricState: potential length does not match grid");
  MetricState s;
  s.grid_ = std::move(grid);
  s.phi_ = std::move(phi);
  s.t_ = t;
  const Grid& g = *s.grid_;
  const Vec& x = g.nodes();
  const int n = g.size();
  s.density_.resize(n);
  s.tderiv_.resize(n);
  s.moment_.resize(n);
  s.conformal_.resize(n);

  auto reject = [&](int i, double value, const char* what) {
    std::ostringstream os;
    os << "positivity lost at node " << i << " (xi = " << x[i] << "): " << what << " = " << value;
    fail(ErrorCode::kPositivity, os.str());
  };

  if (g.backend().kind == BackendKind::kCp1Conformal) {
    const Vec d1 = g.diff() * s.phi_;
    const Vec d2 = g.diff2() * s.phi_;
    for (int i = 0; i < n; ++i) {
      const double q = 1.0 - x[i] * x[i];
      const double rho = 1.0 + 0.5 * (q * d2[i] - 2.0 * x[i] * d1[i]);
      if (!(rho > 0.0) || !std::isfinite(rho)) reject(i, rho, "conformal factor");
      s.conformal_[i] = rho;
      s.density_[i] = 2.0 * kPi * rho;
      s.tderiv_[i] = q;
      s.moment_[i] = rho * q;
    }
  } else {
    // phi holds psi'' directly; differentiating a stored psi twice would
    // put four derivatives between the state and s
    for (int i = 0; i < n; ++i) {
      const double theta0 = g.backend().reference_profile(x[i]);
      const double q = 1.0 + theta0 * s.phi_[i];
      if (!(q > 0.0) || !std::isfinite(q)) reject(i, q, "1 + Theta_0 psi''");
      const double theta = theta0 / q;
      s.conformal_[i] = 1.0 / q;
      s.density_[i] = 4.0 * kPi * kPi * x[i];
      s.tderiv_[i] = theta;
      s.moment_[i] = theta;
    }
  }
  return s;
}

MetricState MetricState::at_time(double t) const {
  MetricState s = *this;
  s.t_ = t;
  return s;
}

double MetricState::integral(const Vec& f) const {
  return (grid_->weights().array() * density_.array() * f.array()).sum();
}

Mat MetricState::laplacian_matrix() const {
  // Delta f = (1/density) (density * stiffness * f')'
  const Vec stiff_density =
      (density_.array() * tderiv_.array().square() / (2.0 * moment_.array())).matrix();
  const Vec slope = grid_->diff() * stiff_density;
  const Vec inv = density_.cwiseInverse();
  return inv.asDiagonal() *
         (Mat(stiff_density.asDiagonal()) * grid_->diff2() + Mat(slope.asDiagonal()) * grid_->diff());
}

Vec MetricState::laplacian(const Vec& f) const { return laplacian_matrix() * f; }

Vec MetricState::grad_sq(const Vec& f) const {
  const Vec df = grid_->diff() * f;
  return (tderiv_.array().square() * df.array().square() / (2.0 * moment_.array())).matrix();
}

Vec MetricState::t_derivative(const Vec& f) const {
  return (tderiv_.array() * (grid_->diff() * f).array()).matrix();
}

std::uint64_t MetricState::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  mix(phi_.data(), sizeof(double) * static_cast<std::size_t>(phi_.size()));
  mix(&t_, sizeof t_);
  return h;
}

MetricState initial_metric(const GridPtr& grid, const MetricDescriptor& descriptor) {
  MetricState canonical = MetricState::from_potential(grid, Vec::Zero(grid->size()), 0.0);
  if (descriptor.kind == MetricDescriptor::Kind::kCanonical) return canonical;
  return perturb_metric(canonical, descriptor.amplitude, descriptor.mode_index);
}

MetricState perturb_metric(const MetricState& state, double amplitude, int mode_index) {
  if (mode_index < 2)
    fail(ErrorCode::kInvalidArgument, "perturb_metric: mode_index must be >= 2");
  if (amplitude == 0.0) return state;
  const Grid& g = state.grid();
  Vec phi = state.phi();
  const bool cp1 = state.backend().kind == BackendKind::kCp1Conformal;
  const double half = 0.5 * (state.backend().hi - state.backend().lo);
  for (int i = 0; i < g.size(); ++i) {
    const double r = g.reference_nodes()[i];
    phi[i] += cp1 ? amplitude * quadrature::legendre_values(mode_index, r)[mode_index]
                  : amplitude * legendre_second_derivative(mode_index, r) / (half * half);
  }
  return MetricState::from_potential(state.grid_ptr(), std::move(phi), state.time());
}

Field scalar_curvature(const MetricState& state) {
  const Grid& g = state.grid();
  const Vec& x = g.nodes();
  const int n = g.size();
  Vec s(n);
  if (state.backend().kind == BackendKind::kCp1Conformal) {
    // Gauss curvature of rho g_round: (1 - Delta_round log rho) / rho
    const Vec lr = state.conformal().array().log().matrix();
    const Vec d1 = g.diff() * lr;
    const Vec d2 = g.diff2() * lr;
    for (int i = 0; i < n; ++i) {
      const double lap = 0.5 * ((1.0 - x[i] * x[i]) * d2[i] - 2.0 * x[i] * d1[i]);
      s[i] = (1.0 - lap) / state.conformal()[i];
    }
  } else {
    // momentum construction over a base of scalar curvature 2 (Kähler):
    // s = 2/tau - (tau Theta)'' / (2 tau)
    const Vec& theta = state.moment();
    const Vec d1 = g.diff() * theta;
    const Vec d2 = g.diff2() * theta;
    for (int i = 0; i < n; ++i)
      s[i] = 2.0 / x[i] - (2.0 * d1[i] + x[i] * d2[i]) / (2.0 * x[i]);
  }
  return Field::real(std::move(s));
}

double volume(const MetricState& state) { return state.integral(Vec::Ones(state.grid().size())); }

double integrate(const Field& field, const MetricState& state, Weight weight, const Field* u,
                 const Field* theta) {
  if (field.size() != state.grid().size())
    fail(ErrorCode::kInvalidArgument, "integrate: field length does not match grid");
  Vec w = Vec::Ones(field.size());
  if (weight == Weight::kExpMinusU) {
    if (!u) fail(ErrorCode::kInvalidArgument, "integrate: e^{-u} weight needs an attached u");
    w = (-u->re.array()).exp().matrix();
  } else if (weight == Weight::kExpTheta) {
    if (!theta) fail(ErrorCode::kInvalidArgument, "integrate: e^{theta} weight needs an attached theta");
    w = theta->re.array().exp().matrix();
  }
  if (field.mode != 0) return 0.0;
  return state.integral((field.re.array() * w.array()).matrix());
}

Field grad_norm_sq(const Field& f, const MetricState& state) {
  const Grid& g = state.grid();
  const Vec dre = g.diff() * f.re;
  const Vec dim = f.im.size() ? Vec(g.diff() * f.im) : Vec::Zero(f.re.size());
  const Vec im = f.im.size() ? f.im : Vec::Zero(f.re.size());
  const double m2 = static_cast<double>(f.mode) * f.mode;
  const auto e2 = state.tderiv().array().square();
  Vec out = ((e2 * (dre.array().square() + dim.array().square()) +
              m2 * (f.re.array().square() + im.array().square())) /
             (2.0 * state.moment().array()))
                .matrix();
  return Field::real(std::move(out));
}

}  // namespace rlab
