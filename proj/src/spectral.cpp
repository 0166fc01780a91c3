#include "ricci_lab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numbers>
#include <sstream>

#include "ricci_lab/error.hpp"
#include "ricci_lab/potentials.hpp"

namespace rlab {

namespace {

constexpr double kKernelTol = 1e-6;

bool is_cp1(const MetricState& s) { return s.backend().kind == BackendKind::kCp1Conformal; }

void check_mode(const MetricState& s, int mode) {
  if (std::abs(mode) > s.backend().max_supported_mode()) {
    std::ostringstream os;
    os << "mode " << mode << " not supported by backend " << s.backend().name();
    fail(ErrorCode::kUnsupported, os.str());
  }
}

// F = P G for functions; returns P and the zeroth-order coefficient c with
// tderiv F' - m F = P (tderiv G' + c G).
void function_pole(bool cp1, const Vec& x, int m, Vec& p, Vec& c) {
  const Eigen::Index n = x.size();
  p = Vec::Ones(n);
  c = Vec::Zero(n);
  if (!cp1) return;
  const double am = std::abs(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = std::pow(1.0 - x[i] * x[i], 0.5 * am);
    c[i] = -am * x[i] - m;
  }
}

// Same for vector-field coefficients: V^w = (1-x)^a (1+x)^b G.
void vector_pole(bool cp1, const Vec& x, int m, Vec& p, Vec& c) {
  const Eigen::Index n = x.size();
  p = Vec::Ones(n);
  c = Vec::Zero(n);
  if (!cp1) return;
  const double a = 0.5 * (std::abs(m - 1) - 1);
  const double b = 0.5 * (std::abs(m + 1) - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = std::pow(1.0 - x[i], a) * std::pow(1.0 + x[i], b);
    c[i] = -a * (1.0 + x[i]) + b * (1.0 - x[i]) - m;
  }
}

Mat first_order(const MetricState& s, const Vec& c) {
  return Mat(s.tderiv().asDiagonal()) * s.grid().diff() + Mat(c.asDiagonal());
}

Vec weight_values(const MetricState& s, Weight weight, const Field* u, const Field* theta) {
  const int n = s.grid().size();
  switch (weight) {
    case Weight::kDv:
      return Vec::Ones(n);
    case Weight::kExpMinusU:
      if (!u) fail(ErrorCode::kInvalidArgument, "e^{-u} weight needs u");
      return (-u->re.array()).exp().matrix();
    case Weight::kExpTheta:
      if (!theta) fail(ErrorCode::kInvalidArgument, "e^{theta} weight needs theta");
      return theta->re.array().exp().matrix();
  }
  return Vec::Ones(n);
}

// Stiffness forms are first-order squares of degree ~2N; Gauss at the N
// collocation nodes underintegrates them and admits spurious null vectors,
// so they are evaluated on a 2N-point rule through the interpolant.
struct FineRule {
  Vec x, w, density, tderiv, moment;
  Mat interp, interp_diff;
};

FineRule fine_rule(const MetricState& s) {
  const Grid& g = s.grid();
  const int m = 2 * g.size();
  const auto ref = quadrature::gauss_legendre(m);
  const Backend& b = s.backend();
  const double half = 0.5 * (b.hi - b.lo), mid = 0.5 * (b.hi + b.lo);
  FineRule f;
  f.x = (mid + half * ref.nodes.array()).matrix();
  f.w = half * ref.weights;
  f.interp = g.interpolation_to(f.x);
  f.interp_diff = f.interp * g.diff();
  const Vec conf = f.interp * s.conformal();
  f.density.resize(m);
  f.tderiv.resize(m);
  f.moment.resize(m);
  for (int i = 0; i < m; ++i) {
    const double theta = conf[i] * b.reference_profile(f.x[i]);
    f.moment[i] = theta;
    if (b.kind == BackendKind::kCp1Conformal) {
      f.density[i] = 2.0 * std::numbers::pi * conf[i];
      f.tderiv[i] = 1.0 - f.x[i] * f.x[i];
    } else {
      f.density[i] = 4.0 * std::numbers::pi * std::numbers::pi * f.x[i];
      f.tderiv[i] = theta;
    }
  }
  return f;
}

// Fine-rule values of tderiv G' + c G for nodal G.
Mat fine_first_order(const FineRule& f, const Vec& c_fine) {
  return Mat(f.tderiv.asDiagonal()) * f.interp_diff + Mat(c_fine.asDiagonal()) * f.interp;
}

struct Pencil {
  Mat a;
  Vec mass;
  Vec pole;
};

Pencil function_pencil(const MetricState& s, const FineRule& f, const Field& u, int m) {
  const bool cp1 = is_cp1(s);
  Vec p, c, pf, cf;
  function_pole(cp1, s.grid().nodes(), m, p, c);
  function_pole(cp1, f.x, m, pf, cf);
  const Vec mass = (s.grid().weights().array() * s.density().array() * (-u.re.array()).exp() *
                    p.array().square())
                       .matrix();
  const Vec uf = f.interp * u.re;
  const Vec q = (f.w.array() * f.density.array() * (-uf.array()).exp() * pf.array().square() /
                 (2.0 * f.moment.array()))
                    .matrix();
  const Mat d = fine_first_order(f, cf);
  return {d.transpose() * q.asDiagonal() * d, mass, p};
}

Pencil vector_pencil(const MetricState& s, const FineRule& f, const Vec& log_wt, int m) {
  const bool cp1 = is_cp1(s);
  Vec p, c, pf, cf;
  vector_pole(cp1, s.grid().nodes(), m, p, c);
  vector_pole(cp1, f.x, m, pf, cf);
  const Vec mass = (s.grid().weights().array() * s.density().array() * log_wt.array().exp() *
                    p.array().square() * 0.5 * s.moment().array())
                       .matrix();
  const Vec lf = f.interp * log_wt;
  const Vec q = (0.25 * f.w.array() * f.density.array() * lf.array().exp() * pf.array().square()).matrix();
  const Mat d = fine_first_order(f, cf);
  return {d.transpose() * q.asDiagonal() * d, mass, p};
}

Mat symmetrize(const Pencil& pen, Vec& sqrt_mass) {
  sqrt_mass = pen.mass.cwiseSqrt();
  const Vec inv = sqrt_mass.cwiseInverse();
  Mat sym = inv.asDiagonal() * pen.a * inv.asDiagonal();
  return 0.5 * (sym + sym.transpose());
}

Eigen::SelfAdjointEigenSolver<Mat> solve_pencil(const Pencil& pen, Vec& sqrt_mass, bool vectors) {
  const Mat sym = symmetrize(pen, sqrt_mass);
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorCode::kNonFinite, "eigensolver did not converge");
  return es;
}

// Trailing Legendre coefficients of the metric data and u, as a proxy for
// the discretization error.
double error_estimate(const MetricState& s, const Field& u) {
  const Mat& leg = s.grid().legendre();
  auto tail = [&](const Vec& f) {
    const Vec c = leg * f;
    const int n = static_cast<int>(c.size());
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    double t = 0.0;
    for (int k = std::max(0, n - 3); k < n; ++k) t = std::max(t, std::abs(c[k]));
    return t / scale;
  };
  return std::max(tail(u.re), tail(s.conformal().array().log().matrix()));
}

std::vector<int> mode_range(const MetricState& s, int m_max) {
  const int mm = std::min(std::max(m_max, 0), s.backend().max_supported_mode());
  std::vector<int> modes;
  for (int m = -mm; m <= mm; ++m) modes.push_back(m);
  return modes;
}

int expected_h0(const MetricState& s, const std::vector<int>& modes) {
  int count = 0;
  for (const auto& h : s.backend().basis)
    if (std::find(modes.begin(), modes.end(), h.mode) != modes.end()) ++count;
  return count;
}

template <class F>
auto parallel_map(const std::vector<int>& modes, F fn) {
  using R = decltype(fn(0));
  std::vector<std::future<R>> futs;
  futs.reserve(modes.size());
  for (int m : modes) futs.push_back(std::async(std::launch::async, fn, m));
  std::vector<R> out;
  out.reserve(modes.size());
  for (auto& f : futs) out.push_back(f.get());
  return out;
}

}  // namespace

WeightedOperator assemble_weighted_laplacian(const MetricState& state, const Field& u, int mode) {
  check_mode(state, mode);
  const Pencil pen = function_pencil(state, fine_rule(state), u, mode);
  WeightedOperator op;
  op.mode = mode;
  op.symmetric = symmetrize(pen, op.sqrt_mass);
  op.pole_factor = pen.pole;
  return op;
}

ModeEigensystem mode_eigensystem(const MetricState& state, const Field& u, int mode) {
  check_mode(state, mode);
  const Pencil pen = function_pencil(state, fine_rule(state), u, mode);
  Vec sq;
  const auto es = solve_pencil(pen, sq, true);
  ModeEigensystem out;
  out.mode = mode;
  out.eigenvalues = es.eigenvalues();
  const Vec scale = (pen.pole.array() / sq.array()).matrix();
  out.profiles = scale.asDiagonal() * es.eigenvectors();
  return out;
}

SpectrumReport function_spectrum(const MetricState& state, const Field& u, int m_max, int k_per_mode) {
  const std::vector<int> modes = mode_range(state, m_max);
  const int keep = std::max(1, k_per_mode);
  const FineRule fr = fine_rule(state);
  auto per_mode = parallel_map(modes, [&](int m) {
    const Pencil pen = function_pencil(state, fr, u, m);
    Vec sq;
    const auto es = solve_pencil(pen, sq, false);
    ModeSpectrum ms;
    ms.mode = m;
    const Vec& ev = es.eigenvalues();
    for (int k = 0; k < std::min<int>(keep, static_cast<int>(ev.size())); ++k) ms.eigenvalues.push_back(ev[k]);
    return ms;
  });

  SpectrumReport rep;
  rep.modes = std::move(per_mode);
  rep.band_tol = std::max(1e-6, 50.0 * error_estimate(state, u));
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.smallest_nonzero = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ms : rep.modes) {
    for (int k = 0; k < static_cast<int>(ms.eigenvalues.size()); ++k) {
      const double v = ms.eigenvalues[k];
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, v);
      if (std::abs(v) > kKernelTol) rep.smallest_nonzero = std::min(rep.smallest_nonzero, v);
      if (std::abs(v - 1.0) <= rep.band_tol) {
        rep.band.push_back({ms.mode, k, v});
        rep.band_width = std::max(rep.band_width, std::abs(v - 1.0));
      } else if (v > 1.0 + rep.band_tol && v < best) {
        best = v;
        rep.lambda_mode = ms.mode;
        rep.lambda_index = k;
      }
    }
  }
  if (std::isfinite(best)) rep.lambda = best;

  const int expected = expected_h0(state, modes);
  if (static_cast<int>(rep.band.size()) != expected) {
    std::ostringstream os;
    os << "eigenvalue-one band has " << rep.band.size() << " members, expected " << expected << " (tol "
       << rep.band_tol << "):";
    for (const auto& b : rep.band) os << " [m=" << b.mode << " " << b.value << "]";
    fail(ErrorCode::kBand, os.str());
  }
  return rep;
}

VectorFieldSpectrum vector_field_spectrum(const MetricState& state, const Field& u, Weight weight, int m_max) {
  if (weight == Weight::kExpTheta)
    fail(ErrorCode::kInvalidArgument, "vector_field_spectrum: weight must be dv or e^{-u} dv");
  const Vec log_wt = weight == Weight::kDv ? Vec(Vec::Zero(state.grid().size())) : Vec(-u.re);
  const std::vector<int> modes = mode_range(state, m_max);
  const FineRule fr = fine_rule(state);
  auto per_mode = parallel_map(modes, [&](int m) {
    const Pencil pen = vector_pencil(state, fr, log_wt, m);
    Vec sq;
    const auto es = solve_pencil(pen, sq, false);
    ModeSpectrum ms;
    ms.mode = m;
    const Vec& ev = es.eigenvalues();
    for (int k = 0; k < std::min<int>(12, static_cast<int>(ev.size())); ++k) ms.eigenvalues.push_back(ev[k]);
    return ms;
  });

  VectorFieldSpectrum out;
  out.modes = std::move(per_mode);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ms : out.modes) {
    for (double v : ms.eigenvalues) {
      if (v < kKernelTol) {
        ++out.kernel_dim;
      } else if (v < best) {
        best = v;
        out.mode_of_min = ms.mode;
      }
    }
  }
  if (std::isfinite(best)) out.smallest_positive = best;
  const int expected = expected_h0(state, modes);
  if (out.kernel_dim != expected) {
    std::ostringstream os;
    os << "d-bar kernel has dimension " << out.kernel_dim << ", expected " << expected;
    fail(ErrorCode::kMismatch, os.str());
  }
  return out;
}

SpectrumReport spectrum_report(const MetricState& state, const Field& u, int m_max, int k_per_mode) {
  SpectrumReport rep = function_spectrum(state, u, m_max, k_per_mode);
  const VectorFieldSpectrum plain = vector_field_spectrum(state, u, Weight::kDv, m_max);
  const VectorFieldSpectrum tilde = vector_field_spectrum(state, u, Weight::kExpMinusU, m_max);
  rep.mu = plain.smallest_positive;
  rep.kernel_dim = plain.kernel_dim;
  rep.mu_tilde = tilde.smallest_positive;
  rep.kernel_dim_tilde = tilde.kernel_dim;
  return rep;
}

VectorField gradient_field(const MetricState& state, const Field& f) {
  check_mode(state, f.mode);
  Vec p, c;
  function_pole(is_cp1(state), state.grid().nodes(), f.mode, p, c);
  const Mat d = first_order(state, c);
  const Vec scale = (p.array() / state.moment().array()).matrix();
  auto apply = [&](const Vec& v) -> Vec {
    const Vec g = (v.array() / p.array()).matrix();
    return (scale.array() * (d * g).array()).matrix();
  };
  Field out;
  out.mode = f.mode;
  out.re = apply(f.re);
  out.im = f.im.size() ? apply(f.im) : Vec::Zero(f.re.size());
  return {{out}};
}

std::complex<double> inner_product(const MetricState& state, const VectorField& v, const VectorField& w,
                                   Weight weight, const Field* u, const Field* theta) {
  const Vec wt = weight_values(state, weight, u, theta);
  const Vec base =
      (state.grid().weights().array() * state.density().array() * wt.array() * 0.5 * state.moment().array())
          .matrix();
  const int n = state.grid().size();
  std::complex<double> sum = 0.0;
  for (const Field& a : v.components) {
    for (const Field& b : w.components) {
      if (a.mode != b.mode) continue;
      const Vec ai = a.im.size() ? a.im : Vec::Zero(n);
      const Vec bi = b.im.size() ? b.im : Vec::Zero(n);
      const double re = (base.array() * (a.re.array() * b.re.array() + ai.array() * bi.array())).sum();
      const double im = (base.array() * (ai.array() * b.re.array() - a.re.array() * bi.array())).sum();
      sum += std::complex<double>(re, im);
    }
  }
  return sum / volume(state);
}

VectorField basis_field(const MetricState& state, int index) {
  const auto& basis = state.backend().basis;
  if (index < 0 || index >= static_cast<int>(basis.size()))
    fail(ErrorCode::kInvalidArgument, "basis_field: index out of range");
  const int m = basis[index].mode;
  const Vec& x = state.grid().nodes();
  Vec h(x.size());
  for (int i = 0; i < x.size(); ++i) {
    // e^{m t}; on CP1 x = tanh t
    h[i] = m == 0 ? 1.0 : std::pow((1.0 + x[i]) / (1.0 - x[i]), 0.5 * m);
  }
  return {{Field::real(std::move(h), m)}};
}

namespace {

VectorField combine(const VectorField& v, const VectorField& w, std::complex<double> wscale, int n) {
  std::map<int, Field> acc;
  auto add = [&](const Field& f, std::complex<double> s) {
    auto it = acc.find(f.mode);
    if (it == acc.end()) {
      Field z;
      z.mode = f.mode;
      z.re = Vec::Zero(n);
      z.im = Vec::Zero(n);
      it = acc.emplace(f.mode, z).first;
    }
    const Vec fi = f.im.size() ? f.im : Vec::Zero(n);
    it->second.re += s.real() * f.re - s.imag() * fi;
    it->second.im += s.real() * fi + s.imag() * f.re;
  };
  for (const Field& f : v.components) add(f, 1.0);
  for (const Field& f : w.components) add(f, wscale);
  VectorField out;
  for (auto& [m, f] : acc) out.components.push_back(std::move(f));
  return out;
}

}  // namespace

Projection project_h0(const VectorField& v, const MetricState& state, Weight weight, const Field* u,
                      const Field* theta) {
  const int k = state.backend().h0_dim();
  const int n = state.grid().size();
  std::vector<VectorField> basis;
  for (int i = 0; i < k; ++i) basis.push_back(basis_field(state, i));
  Eigen::MatrixXcd gram(k, k);
  Eigen::VectorXcd rhs(k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) gram(i, j) = inner_product(state, basis[j], basis[i], weight, u, theta);
    rhs[i] = inner_product(state, v, basis[i], weight, u, theta);
  }
  const Eigen::VectorXcd coef = gram.fullPivLu().solve(rhs);

  Projection out;
  for (int i = 0; i < k; ++i) {
    out.coefficients.push_back(coef[i]);
    out.projection = combine(out.projection, basis[i], coef[i], n);
  }
  out.residual = combine(v, out.projection, -1.0, n);
  out.cross = std::abs(inner_product(state, out.projection, out.residual, weight, u, theta));
  return out;
}

Decomposition decompose_against_eigenbasis(const MetricState& state, const Field& u, const Vec& centered) {
  const ModeEigensystem es = mode_eigensystem(state, u, 0);
  const double tol = std::max(1e-6, 50.0 * error_estimate(state, u));
  const Vec mass =
      (state.grid().weights().array() * state.density().array() * (-u.re.array()).exp()).matrix();
  const Vec coef = es.profiles.transpose() * mass.asDiagonal() * centered;
  const int n = state.grid().size();
  Decomposition d;
  d.band = Vec::Zero(n);
  d.higher = Vec::Zero(n);
  for (int j = 0; j < es.eigenvalues.size(); ++j) {
    const double v = es.eigenvalues[j];
    if (std::abs(v - 1.0) <= tol)
      d.band += coef[j] * es.profiles.col(j);
    else
      d.higher += coef[j] * es.profiles.col(j);
  }
  d.reconstruction_error = (d.band + d.higher - centered).cwiseAbs().maxCoeff();
  return d;
}

Decomposition decompose_against_eigenbasis(const Field& u, const MetricState& state) {
  const Averages av = compute_averages(state, u);
  return decompose_against_eigenbasis(state, u, (u.re.array() - av.a).matrix());
}

BochnerCheck bochner_check(const MetricState& state, const Field& u, const SpectrumReport& report) {
  if (!std::isfinite(report.lambda)) fail(ErrorCode::kBand, "bochner_check: no eigenvalue above the band");
  const int m = report.lambda_mode;
  const ModeEigensystem es = mode_eigensystem(state, u, m);
  const double lambda = es.eigenvalues[report.lambda_index];
  const Vec f = es.profiles.col(report.lambda_index);

  // grad psi has V^w = P_f H / Theta, H = tderiv G' + c G; rewritten in the
  // vector-field factorization before differentiating again.
  const bool cp1 = is_cp1(state);
  const Vec& x = state.grid().nodes();
  Vec pf, cf, pv, cv;
  function_pole(cp1, x, m, pf, cf);
  vector_pole(cp1, x, m, pv, cv);
  const Vec h = first_order(state, cf) * (f.array() / pf.array()).matrix();
  const Vec gv = (pf.array() * h.array() / (state.moment().array() * pv.array())).matrix();

  const FineRule fr = fine_rule(state);
  Vec pvf, cvf;
  vector_pole(cp1, fr.x, m, pvf, cvf);
  const Vec vw = (pvf.array() * (fr.interp * gv).array()).matrix();
  const Vec b = fine_first_order(fr, cvf) * gv;
  const Vec uf = fr.interp * u.re;
  const Vec base = (fr.w.array() * fr.density.array() * (-uf.array()).exp()).matrix();
  const double grad = (base.array() * 0.5 * fr.moment.array() * vw.array().square()).sum();
  const double dbar = (base.array() * 0.25 * pvf.array().square() * b.array().square()).sum();

  BochnerCheck out;
  out.lhs = (lambda - 1.0) * grad;
  out.rhs = dbar;
  out.relative_residual = std::abs(out.lhs - out.rhs) / std::max(std::abs(out.rhs), 1e-300);
  return out;
}

}  // namespace rlab
