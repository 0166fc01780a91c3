#include "ricci_lab/potentials.hpp"

#include <cmath>
#include <sstream>

#include "ricci_lab/error.hpp"

namespace rlab {

namespace {

constexpr double kNormalizationTol = 1e-8;
constexpr double kClassDefectTol = 1e-6;

double sup_abs(const Vec& v) { return v.cwiseAbs().maxCoeff(); }
double osc(const Vec& v) { return v.maxCoeff() - v.minCoeff(); }

double weighted_mean(const MetricState& state, const Vec& f, const Vec& weight) {
  return state.integral((f.array() * weight.array()).matrix()) / volume(state);
}

}  // namespace

Vec solve_weighted_poisson(const MetricState& state, const Vec& rhs, double* residual) {
  const int n = state.grid().size();
  const double vol = volume(state);
  const double mean = state.integral(rhs);
  const double scale = std::max(1.0, sup_abs(rhs));
  if (std::abs(mean) > 1e-9 * vol * scale) {
    std::ostringstream os;
    os << "Poisson right-hand side has nonzero mean " << mean / vol << " (not solvable)";
    fail(ErrorCode::kSolvability, os.str());
  }
  Mat a = Mat::Zero(n + 1, n + 1);
  a.topLeftCorner(n, n) = state.laplacian_matrix();
  a.block(0, n, n, 1).setOnes();
  a.block(n, 0, 1, n) = (state.grid().weights().array() * state.density().array()).matrix().transpose() / vol;
  Vec b = Vec::Zero(n + 1);
  b.head(n) = rhs;
  Eigen::PartialPivLU<Mat> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << "Poisson system singular (reciprocal condition estimate " << rcond << ")";
    fail(ErrorCode::kSingular, os.str());
  }
  const Vec sol = lu.solve(b);
  Vec u = sol.head(n);
  if (residual) *residual = sup_abs(state.laplacian_matrix() * u - rhs);
  return u;
}

Vec normalize_ricci_potential(const MetricState& state, const Vec& u) {
  const Vec e = (-u.array()).exp().matrix();
  const double c = std::log(state.integral(e) / volume(state));
  return (u.array() + c).matrix();
}

Field solve_ricci_potential(const MetricState& state, double* residual) {
  const Field s = scalar_curvature(state);
  Vec rhs = (state.backend().n - s.re.array()).matrix();
  // int (n - s) dv = 0 holds in the continuum; on F1 the discrete boundary
  // flux of (tau Theta)'' carries truncation error, removed here. A defect
  // far above truncation level means a wrong class and is still rejected.
  const double defect = state.integral(rhs) / volume(state);
  if (std::abs(defect) > kClassDefectTol) {
    std::ostringstream os;
    os << "mean of n - s is " << defect << "; metric not in the normalized class";
    fail(ErrorCode::kSolvability, os.str());
  }
  rhs.array() -= defect;
  return Field::real(normalize_ricci_potential(state, solve_weighted_poisson(state, rhs, residual)));
}

Field solve_holomorphy_potential(const MetricState& state, double c) {
  const int n = state.grid().size();
  if (c == 0.0) return Field::real(Vec::Zero(n));
  // d theta/dt = c Theta  =>  d theta/dxi = c Theta / tderiv
  const Vec slope = (c * state.moment().array() / state.tderiv().array()).matrix();
  Vec theta = state.grid().antiderivative() * slope;
  const double shift = std::log(state.integral(theta.array().exp().matrix()) / volume(state));
  theta.array() -= shift;
  return Field::real(std::move(theta));
}

Averages compute_averages(const MetricState& state, const Field& u, const Field* theta) {
  const Vec emu = (-u.re.array()).exp().matrix();
  const double vol = volume(state);
  const double norm_u = state.integral(emu) / vol;
  if (std::abs(norm_u - 1.0) > kNormalizationTol) {
    std::ostringstream os;
    os << "compute_averages: u not normalized ((1/V) int e^{-u} dv = " << norm_u << ")";
    fail(ErrorCode::kInvalidArgument, os.str());
  }
  Averages out;
  out.a = weighted_mean(state, u.re, emu);
  if (theta) {
    const double norm_t = state.integral(theta->re.array().exp().matrix()) / vol;
    if (std::abs(norm_t - 1.0) > kNormalizationTol) {
      std::ostringstream os;
      os << "compute_averages: theta not normalized ((1/V) int e^{theta} dv = " << norm_t << ")";
      fail(ErrorCode::kInvalidArgument, os.str());
    }
    out.a_x = weighted_mean(state, (u.re + theta->re).eval(), emu);
  }
  return out;
}

PotentialSet compute_potentials(const MetricState& state, double x_strength) {
  PotentialSet p;
  p.x_strength = x_strength;
  p.u = solve_ricci_potential(state);
  const Vec& u = p.u.re;
  if (x_strength != 0.0) {
    p.theta = solve_holomorphy_potential(state, x_strength);
    p.w = Field::real(u + p.theta->re);
  }
  const Averages av = compute_averages(state, p.u, p.theta ? &*p.theta : nullptr);
  p.a = av.a;
  p.a_x = av.a_x;
  p.osc_u = osc(u);
  p.osc_w = p.w ? osc(p.w->re) : p.osc_u;

  const Mat lap = state.laplacian_matrix();
  p.sup.u = sup_abs(u);
  p.sup.grad_u = std::sqrt(state.grad_sq(u).maxCoeff());
  p.sup.lap_u = sup_abs(lap * u);
  if (p.w) {
    p.sup.w = sup_abs(p.w->re);
    p.sup.grad_w = std::sqrt(state.grad_sq(p.w->re).maxCoeff());
    p.sup.lap_w = sup_abs(lap * p.w->re);
    p.sup.grad_theta = std::sqrt(state.grad_sq(p.theta->re).maxCoeff());
    p.sup.lap_theta = sup_abs(lap * p.theta->re);
  } else {
    p.sup.w = p.sup.u;
    p.sup.grad_w = p.sup.grad_u;
    p.sup.lap_w = p.sup.lap_u;
  }
  return p;
}

namespace {

struct Moments {
  double Y, Z, ratio;
  bool degenerate;
};

Moments variance_moments(const MetricState& state, const Vec& f, double mean, const Vec& emu) {
  const double vol = volume(state);
  const Vec dev = (f.array() - mean).matrix();
  const double num = state.integral((state.grad_sq(f).array() * emu.array()).matrix());
  const double den = state.integral((dev.array().square() * emu.array()).matrix());
  Moments m;
  m.Y = den / vol;
  m.Z = (num - den) / vol;
  m.degenerate = den < 1e-14 * vol;
  m.ratio = m.degenerate ? 0.0 : num / den;
  return m;
}

}  // namespace

DiagnosticsRecord diagnostics(const MetricState& state, const PotentialSet& pots) {
  DiagnosticsRecord r;
  r.t = state.time();
  const Vec emu = (-pots.u.re.array()).exp().matrix();
  const Moments mu = variance_moments(state, pots.u.re, pots.a, emu);
  r.Y = mu.Y;
  r.Z = mu.Z;
  r.poincare_ratio = mu.ratio;
  r.ratio_degenerate = mu.degenerate;
  r.a = pots.a;
  r.a_x = pots.a_x;
  r.osc_u = pots.osc_u;
  r.osc_w = pots.osc_w;
  r.sup = pots.sup;
  r.sup_u_minus_a = sup_abs((pots.u.re.array() - pots.a).matrix());
  if (pots.w) {
    const Moments mw = variance_moments(state, pots.w->re, *pots.a_x, emu);
    r.Y_w = mw.Y;
    r.Z_w = mw.Z;
    r.poincare_ratio_w = mw.ratio;
    r.ratio_w_degenerate = mw.degenerate;
    r.sup_w_minus_ax = sup_abs((pots.w->re.array() - *pots.a_x).matrix());
  } else {
    r.Y_w = r.Y;
    r.Z_w = r.Z;
    r.poincare_ratio_w = r.poincare_ratio;
    r.ratio_w_degenerate = r.ratio_degenerate;
    r.sup_w_minus_ax = r.sup_u_minus_a;
  }
  return r;
}

PerelmanReport perelman_monitor(std::span<const DiagnosticsRecord> records, double threshold) {
  PerelmanReport rep;
  std::vector<double> envelope;
  envelope.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SupNorms& s = records[i].sup;
    const double vals[] = {s.u, s.grad_u, s.lap_u, s.w, s.grad_w, s.lap_w, s.grad_theta, s.lap_theta};
    bool finite = true;
    for (double v : vals) finite = finite && std::isfinite(v);
    if (!finite) {
      if (!rep.nonfinite_at) rep.nonfinite_at = i;
      continue;
    }
    rep.max_u = std::max(rep.max_u, s.u);
    rep.max_grad_u = std::max(rep.max_grad_u, s.grad_u);
    rep.max_lap_u = std::max(rep.max_lap_u, s.lap_u);
    rep.max_w = std::max(rep.max_w, s.w);
    rep.max_grad_w = std::max(rep.max_grad_w, s.grad_w);
    rep.max_lap_w = std::max(rep.max_lap_w, s.lap_w);
    rep.max_grad_theta = std::max(rep.max_grad_theta, s.grad_theta);
    rep.max_lap_theta = std::max(rep.max_lap_theta, s.lap_theta);
    envelope.push_back(std::max({s.u, s.grad_u, s.lap_u}));
  }
  const double maxima[] = {rep.max_u, rep.max_grad_u, rep.max_lap_u, rep.max_w,
                           rep.max_grad_w, rep.max_lap_w, rep.max_grad_theta, rep.max_lap_theta};
  for (double m : maxima) rep.bounded = rep.bounded && m <= threshold;
  for (std::size_t i = envelope.size() / 2 + 1; i < envelope.size(); ++i) {
    // a few ulps of noise once the run has settled
    if (envelope[i] > envelope[i - 1] * (1.0 + 1e-9) + 1e-13) rep.tail_nonincreasing = false;
  }
  return rep;
}

}  // namespace rlab
