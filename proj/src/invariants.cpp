#include "ricci_lab/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ricci_lab/error.hpp"

namespace rlab {

namespace {

int symmetric_index(const Backend& b) {
  for (int i = 0; i < b.h0_dim(); ++i)
    if (b.basis[i].mode == 0) return i;
  fail(ErrorCode::kUnsupported, "backend has no symmetric holomorphic field");
}

void check_index(const MetricState& state, int index) {
  if (index < 0 || index >= state.backend().h0_dim())
    fail(ErrorCode::kInvalidArgument, "basis index out of range");
}

// X(f) = d_w f = (1/2) f_t for the symmetric generator acting on invariant f.
double generator_integral(const MetricState& state, const Vec& f, const Vec& weight) {
  return 0.5 * state.integral((state.t_derivative(f).array() * weight.array()).matrix());
}

double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

std::complex<double> futaki(const MetricState& state, const Field& u, int x_index) {
  check_index(state, x_index);
  if (state.backend().basis[x_index].mode != 0 || u.mode != 0) return {0.0, 0.0};
  return {generator_integral(state, u.re, Vec::Ones(u.size())), 0.0};
}

std::complex<double> modified_futaki(const MetricState& state, const Field& u, const Field& theta, int y_index) {
  check_index(state, y_index);
  if (state.backend().basis[y_index].mode != 0 || u.mode != 0) return {0.0, 0.0};
  const Vec w = u.re + theta.re;
  return {generator_integral(state, w, theta.re.array().exp().matrix()), 0.0};
}

double soliton_function(const MetricState& state, const Field& u, double c) {
  const Field theta = solve_holomorphy_potential(state, c);
  return modified_futaki(state, u, theta, symmetric_index(state.backend())).real();
}

SolitonCoefficient soliton_coefficient(const MetricState& state, double lo, double hi, double tol) {
  if (!(lo < hi)) fail(ErrorCode::kInvalidArgument, "soliton_coefficient: empty interval");
  const Field u = solve_ricci_potential(state);
  auto f = [&](double c) { return soliton_function(state, u, c); };

  SolitonCoefficient out;
  out.bracket_lo = lo;
  out.bracket_hi = hi;

  constexpr int kSamples = 16;
  double prev = f(lo);
  const double f_lo = prev;
  double dir = 0.0;
  out.monotone = true;
  for (int i = 1; i <= kSamples; ++i) {
    const double v = f(lo + (hi - lo) * i / kSamples);
    const double s = sign_of(v - prev);
    if (dir == 0.0) dir = s;
    else if (s != 0.0 && s != dir) out.monotone = false;
    prev = v;
  }
  const double f_hi = prev;
  if (std::abs(f_lo) <= tol) {
    out.c = lo;
    out.residual = f_lo;
    return out;
  }
  if (std::abs(f_hi) <= tol) {
    out.c = hi;
    out.residual = f_hi;
    return out;
  }
  if (sign_of(f_lo) == sign_of(f_hi)) {
    std::ostringstream os;
    os << "no sign change of F_{cX}(X) on [" << lo << ", " << hi << "] (values " << f_lo << ", " << f_hi << ")";
    fail(ErrorCode::kBracket, os.str());
  }

  double a = lo, b = hi, fa = f_lo;
  double mid = 0.5 * (a + b), fm = f(mid);
  int it = 0;
  while (std::abs(fm) > tol && it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(mid))) {
    if (sign_of(fm) == sign_of(fa)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
    mid = 0.5 * (a + b);
    fm = f(mid);
    ++it;
  }
  out.c = mid;
  out.residual = fm;
  out.iterations = it;
  return out;
}

MetricState soliton_state(const GridPtr& grid, double c) {
  const Backend& b = grid->backend();
  const int n = grid->size();
  if (b.kind == BackendKind::kCp1Conformal) {
    if (c != 0.0) fail(ErrorCode::kInvalidArgument, "CP1 carries no soliton with c != 0");
    return MetricState::from_potential(grid, Vec::Zero(n));
  }
  if (c == 0.0) fail(ErrorCode::kInvalidArgument, "F1 carries no Kähler-Einstein metric");
  // Fixed point of the modified flow: y' + c y = 4 - 4 tau, y(1) = 2, and
  // Theta = (1/tau) int_1^tau y. With r = tau - 1 both are closed form.
  // Long double: q = 1/Theta - 1/Theta_0 cancels to O(r) at the poles.
  auto primitive = [](long double c, long double r) {
    const long double em = -std::expm1(-c * r);  // 1 - e^{-cr}
    return 2 * em / c - 2 * r * r / c + 4 * r / (c * c) - 4 * em / (c * c * c);
  };
  // Theta must vanish at tau = 3; a grid root is only good to ~1e-10, which
  // the endpoint would amplify, so c is polished on the closed form.
  const double span = b.hi - b.lo;
  long double cc = c;
  for (int it = 0; it < 50; ++it) {
    const long double h = 1e-6L;
    const long double df = (primitive(cc + h, span) - primitive(cc - h, span)) / (2 * h);
    const long double step = primitive(cc, span) / df;
    cc -= step;
    if (std::abs(step) < 1e-19L) break;
  }
  if (!(std::abs(cc - c) <= 1e-6)) {
    std::ostringstream os;
    os << "c = " << c << " is not a soliton coefficient (closed-form root " << static_cast<double>(cc) << ")";
    fail(ErrorCode::kInvalidArgument, os.str());
  }
  auto theta = [&](long double r) { return primitive(cc, r) / (1 + r); };
  const Vec& x = grid->nodes();
  Vec q(n);
  for (int i = 0; i < n; ++i) {
    const long double r = static_cast<long double>(x[i]) - b.lo;
    const long double th0 = r * (span - r);
    const long double th = theta(r);
    q[i] = static_cast<double>((th0 - th) / (th0 * th));
  }
  return MetricState::from_potential(grid, std::move(q));
}

double delta_prime(double delta, double osc) {
  if (!(delta >= 0.0) || !(osc >= 0.0))
    fail(ErrorCode::kInvalidArgument, "delta_prime: inputs must be nonnegative");
  const double e = std::exp(osc);
  return delta / (1.0 + e + delta * e);
}

bool ConditionReport::inequalities_pass() const {
  return pass_poincare && pass_ratio && pass_lambda_bound && pass_sandwich && pass_projection && pass_averages &&
         pass_ratio_w && pass_band_gradient && pass_bochner;
}

ConditionReport check_conditions(const MetricState& state, const PotentialSet& pots, const SpectrumReport& spectrum,
                                 std::optional<InitialAverages> initial, const ConditionTolerances& tol) {
  if (!std::isfinite(spectrum.lambda) || !std::isfinite(spectrum.mu) || !std::isfinite(spectrum.mu_tilde))
    fail(ErrorCode::kInvalidArgument, "check_conditions: spectrum lacks lambda, mu or mu tilde");
  if (pots.u.size() != state.grid().size())
    fail(ErrorCode::kInvalidArgument, "check_conditions: potentials from a different grid");

  ConditionReport r;
  const double vol = volume(state);
  const DiagnosticsRecord d = diagnostics(state, pots);
  const Field& u = pots.u;
  const Field w = pots.w ? *pots.w : u;
  const double a_x = pots.a_x.value_or(pots.a);
  const Vec emu = (-u.re.array()).exp().matrix();

  r.t = state.time();
  r.lambda = spectrum.lambda;
  r.mu = spectrum.mu;
  r.mu_tilde = spectrum.mu_tilde;
  r.osc_u = pots.osc_u;
  r.osc_w = pots.w ? pots.osc_w : pots.osc_u;
  r.ratio_degenerate = d.ratio_degenerate;
  r.ratio_w_degenerate = d.ratio_w_degenerate;
  if (!d.ratio_degenerate) {
    r.strict_poincare_ratio = d.poincare_ratio;
    r.delta_measured = d.poincare_ratio - 1.0;
  }
  if (!d.ratio_w_degenerate) r.strict_poincare_ratio_w = d.poincare_ratio_w;
  const double delta = std::max(0.0, r.lambda - 1.0);
  r.delta_prime = delta_prime(delta, r.osc_u);
  r.delta_prime_w = delta_prime(delta, r.osc_w);

  const int x0 = symmetric_index(state.backend());
  r.futaki = futaki(state, u, x0).real();
  r.modified_futaki = pots.theta ? modified_futaki(state, u, *pots.theta, x0).real() : r.futaki;
  r.futaki_vanishes = std::abs(r.futaki) <= tol.futaki * vol;
  r.modified_futaki_vanishes = std::abs(r.modified_futaki) <= tol.futaki * vol;

  r.margin_poincare = spectrum.smallest_nonzero - 1.0;
  r.pass_poincare = r.margin_poincare >= -std::max(tol.poincare, spectrum.band_tol);

  if (!d.ratio_degenerate) {
    r.margin_ratio = r.strict_poincare_ratio - (1.0 + r.delta_prime);
    r.pass_ratio = !r.futaki_vanishes || r.margin_ratio >= -tol.ratio;
  }
  if (!d.ratio_w_degenerate) {
    r.margin_ratio_w = r.strict_poincare_ratio_w - (1.0 + r.delta_prime_w);
    r.pass_ratio_w = !r.modified_futaki_vanishes || r.margin_ratio_w >= -tol.ratio;
  }

  const double eo = std::exp(r.osc_u);
  r.margin_lambda_bound = r.lambda - (1.0 + r.mu / eo);
  r.pass_lambda_bound = r.margin_lambda_bound >= -tol.relative * std::max(1.0, r.lambda);
  r.margin_sandwich = std::min(r.mu_tilde - r.mu / eo, eo * r.mu - r.mu_tilde);
  r.pass_sandwich = r.margin_sandwich >= -tol.relative * std::max(1.0, eo * r.mu);

  const VectorField gu = gradient_field(state, u);
  {
    const Projection pu = project_h0(gu, state, Weight::kExpMinusU, &u);
    const double pp = inner_product(state, pu.projection, pu.projection, Weight::kDv).real();
    const double vv = inner_product(state, pu.residual, pu.residual, Weight::kDv).real();
    r.margin_projection = vv - pp;
    r.pass_projection = !r.futaki_vanishes || r.margin_projection >= -tol.projection;
    const Projection p0 = project_h0(gu, state, Weight::kDv);
    r.pi0_grad_u = std::sqrt(std::max(0.0, inner_product(state, p0.projection, p0.projection, Weight::kDv).real()));
  }

  double m = -pots.a;
  if (pots.a_x) m = std::min(m, -*pots.a_x);
  if (initial) {
    m = std::min(m, pots.a - initial->a);
    if (pots.a_x && initial->a_x) m = std::min(m, *pots.a_x - *initial->a_x);
  }
  r.margin_averages = m;
  r.pass_averages = m >= -tol.averages;

  {
    const Decomposition dec = decompose_against_eigenbasis(state, u, (w.re.array() - a_x).matrix());
    const double g0 = state.integral((state.grad_sq(dec.band).array() * emu.array()).matrix()) / vol;
    const double gp = state.integral((state.grad_sq(dec.higher).array() * emu.array()).matrix()) / vol;
    r.margin_band_gradient = std::exp(r.osc_w) * gp - g0;
    r.pass_band_gradient =
        !r.modified_futaki_vanishes || r.margin_band_gradient >= -tol.band_gradient * std::max(1.0, g0);
  }

  r.bochner_residual = bochner_check(state, u, spectrum).relative_residual;
  r.pass_bochner = r.bochner_residual <= tol.bochner;
  return r;
}

}  // namespace rlab
