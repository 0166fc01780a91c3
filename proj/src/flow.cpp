#include "ricci_lab/flow.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

namespace rlab {

namespace {

constexpr double kYFloor = 1e-22;
constexpr double kSupFloor = 1e-11;

bool is_cp1(const MetricState& s) { return s.backend().kind == BackendKind::kCp1Conformal; }

double frozen_average(const PotentialSet& pots, double c) {
  if (c == 0.0) return pots.a;
  if (!pots.a_x) fail(ErrorCode::kInvalidArgument, "step: modified flow needs a_X in the potential set");
  return *pots.a_x;
}

void check_finite(const DiagnosticsRecord& d) {
  const double vals[] = {d.Y, d.Z, d.a, d.osc_u, d.sup_u_minus_a, d.sup.grad_u, d.sup.lap_u};
  for (double v : vals) {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite diagnostic at t = " << d.t;
      fail(ErrorCode::kNonFinite, os.str());
    }
  }
}

}  // namespace

void FlowConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::kConfig, "flow config: " + m); };
  if (!(t_end > 0.0)) bad("t_end must be positive");
  if (!(cfl_safety > 0.0 && cfl_safety < 1.0)) bad("cfl_safety must lie in (0, 1)");
  if (!(dt > 0.0)) bad("dt must be positive");
  if (sample_stride < 1) bad("sample_stride must be >= 1");
  if (spectrum_stride < 0) bad("spectrum_stride must be >= 0");
  if (n < 16) bad("grid size below 16");
  if (x_strength != 0.0 && !std::isfinite(x_strength)) bad("x_strength not finite");
}

MetricState FlowTrace::state(std::size_t i) const {
  if (i >= records.size()) fail(ErrorCode::kInvalidArgument, "FlowTrace::state: index out of range");
  return MetricState::from_potential(grid, records[i].phi, records[i].t);
}

Vec flow_velocity(const MetricState& state, double a_frozen, double c) {
  Vec v = solve_ricci_potential(state).re;
  if (c != 0.0) v += solve_holomorphy_potential(state, c).re;
  v.array() -= a_frozen;
  if (is_cp1(state)) return v;
  // d psi''/dt = -(w - a_X)''/2
  return -0.5 * (state.grid().diff2() * v);
}

Mat flow_jacobian(const MetricState& state, double c) {
  const Grid& g = state.grid();
  const Vec& x = g.nodes();
  const int n = g.size();
  Mat j = Mat::Identity(n, n);
  if (is_cp1(state)) {
    j += state.laplacian_matrix();
    if (c != 0.0) {
      const Vec q = (0.5 * c * (1.0 - x.array().square())).matrix();
      j += q.asDiagonal() * g.diff();
    }
  } else {
    // (Theta psi''/2 - (tau - 2) psi' + psi)'' written on psi''
    const Vec half_theta = 0.5 * state.moment();
    const Vec drift = (x.array() - 2.0).matrix();
    j = g.diff2() * half_theta.asDiagonal();
    j -= drift.asDiagonal() * g.diff();
    j -= Mat::Identity(n, n);
  }
  return j;
}

MetricState step(const MetricState& state, const PotentialSet& pots, double c, double dt, StepperKind stepper) {
  if (!(dt > 0.0)) fail(ErrorCode::kInvalidArgument, "step: dt must be positive");
  const double a = frozen_average(pots, c);
  const GridPtr& grid = state.grid_ptr();
  const Vec& y = state.phi();
  auto rhs = [&](const Vec& phi) {
    return flow_velocity(MetricState::from_potential(grid, phi, state.time()), a, c);
  };

  Vec next;
  if (stepper == StepperKind::kSemiImplicit) {
    // ROS2: two-stage second-order W-method, L-stable
    const double gamma = 1.0 + 1.0 / std::sqrt(2.0);
    const int n = static_cast<int>(y.size());
    const Mat w = Mat::Identity(n, n) - gamma * dt * flow_jacobian(state, c);
    const Eigen::PartialPivLU<Mat> lu(w);
    const Vec k1 = lu.solve(flow_velocity(state, a, c));
    const Vec k2 = lu.solve(rhs(y + dt * k1) - 2.0 * k1);
    next = y + 1.5 * dt * k1 + 0.5 * dt * k2;
  } else {
    const Vec k1 = flow_velocity(state, a, c);
    const Vec k2 = rhs(y + 0.5 * dt * k1);
    const Vec k3 = rhs(y + 0.5 * dt * k2);
    const Vec k4 = rhs(y + dt * k3);
    next = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return MetricState::from_potential(grid, std::move(next), state.time() + dt);
}

double explicit_step_size(const MetricState& state, double c, double cfl_safety) {
  const Eigen::EigenSolver<Mat> es(flow_jacobian(state, c), false);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  // 2.78: extent of the RK4 stability region along the negative real axis
  return cfl_safety * 2.78 / radius;
}

FlowTrace run_flow(const FlowConfig& config) {
  config.validate();
  auto trace = std::make_shared<FlowTrace>();
  trace->config = config;
  trace->grid = make_grid(config.backend, config.n);
  const double c = config.x_strength;

  try {
    MetricState state = config.initial_potential
                            ? MetricState::from_potential(trace->grid, *config.initial_potential, 0.0)
                            : initial_metric(trace->grid, config.initial);
    const double dt0 = config.stepper == StepperKind::kSemiImplicit
                           ? config.dt
                           : explicit_step_size(state, c, config.cfl_safety);
    const long n_steps = std::max<long>(1, static_cast<long>(std::ceil(config.t_end / dt0 - 1e-9)));
    const double dt = config.t_end / static_cast<double>(n_steps);
    trace->dt_used = dt;

    long samples = 0;
    auto record = [&](const MetricState& s, const PotentialSet& pots) {
      FlowRecord r;
      r.t = s.time();
      r.hash = s.hash();
      r.phi = s.phi();
      r.diag = diagnostics(s, pots);
      check_finite(r.diag);
      if (config.spectrum_stride > 0 && samples % config.spectrum_stride == 0)
        r.spectrum = spectrum_report(s, pots.u, config.m_max);
      ++samples;
      trace->records.push_back(std::move(r));
    };

    PotentialSet pots = compute_potentials(state, c);
    record(state, pots);
    for (long i = 1; i <= n_steps; ++i) {
      MetricState next = step(state, pots, c, dt, config.stepper);
      state = next.at_time(static_cast<double>(i) * dt);
      pots = compute_potentials(state, c);
      trace->steps = i;
      if (i % config.sample_stride == 0 || i == n_steps) record(state, pots);
    }
  } catch (const Error& e) {
    trace->status = FlowStatus::kAborted;
    std::ostringstream os;
    os << e.what() << " (after " << trace->steps << " steps; last good t = "
       << (trace->records.empty() ? 0.0 : trace->records.back().t) << ")";
    trace->message = os.str();
    throw FlowAborted(e.code(), trace->message, trace);
  }
  return std::move(*trace);
}

DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> q, double floor) {
  if (t.size() != q.size()) fail(ErrorCode::kInvalidArgument, "fit_decay_rate: length mismatch");
  // runs that converge to a discretization-level plateau: stop well above it
  double lowest = std::numeric_limits<double>::infinity();
  for (double v : q)
    if (std::isfinite(v) && v > 0.0) lowest = std::min(lowest, v);
  if (std::isfinite(lowest)) floor = std::max(floor, 100.0 * lowest);
  std::size_t cutoff = 0;
  while (cutoff < q.size() && std::isfinite(q[cutoff]) && q[cutoff] > floor) ++cutoff;
  const std::size_t first = cutoff - cutoff / 2;
  const int m = static_cast<int>(cutoff - first);
  if (m < 10) {
    std::ostringstream os;
    os << "fit_decay_rate: only " << m << " usable samples in the trailing window";
    fail(ErrorCode::kNoDecay, os.str());
  }
  double st = 0, sy = 0;
  for (std::size_t i = first; i < cutoff; ++i) {
    st += t[i];
    sy += std::log(q[i]);
  }
  const double mt = st / m, my = sy / m;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t i = first; i < cutoff; ++i) {
    const double dt = t[i] - mt, dy = std::log(q[i]) - my;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  const double slope = stt > 0 ? sty / stt : 0.0;
  if (!(slope < 0.0)) fail(ErrorCode::kNoDecay, "fit_decay_rate: quantity does not decay");
  DecayFit fit;
  fit.gamma = -slope;
  fit.B = std::exp(my - slope * mt);
  fit.r2 = syy > 0 ? sty * sty / (stt * syy) : 1.0;
  fit.samples = m;
  fit.t_first = t[first];
  fit.t_last = t[cutoff - 1];
  return fit;
}

DecayFit fit_decay_rate(const FlowTrace& trace, DecayQuantity quantity) {
  const bool modified = trace.config.x_strength != 0.0;
  std::vector<double> t, q;
  for (const auto& r : trace.records) {
    t.push_back(r.t);
    switch (quantity) {
      case DecayQuantity::kY:
        q.push_back(modified ? r.diag.Y_w : r.diag.Y);
        break;
      case DecayQuantity::kSupUMinusA:
        q.push_back(modified ? r.diag.sup_w_minus_ax : r.diag.sup_u_minus_a);
        break;
      case DecayQuantity::kZ:
        q.push_back(modified ? r.diag.Z_w : r.diag.Z);
        break;
    }
  }
  return fit_decay_rate(t, q, quantity == DecayQuantity::kSupUMinusA ? kSupFloor : kYFloor);
}

ScalingFit fit_sup_scaling(const FlowTrace& trace, double exponent, double floor) {
  std::vector<double> ratio;
  for (const auto& r : trace.records) {
    if (!(r.diag.Y > floor)) break;
    ratio.push_back(r.diag.sup_u_minus_a / std::pow(r.diag.Y, exponent));
  }
  ScalingFit fit;
  fit.samples = static_cast<int>(ratio.size());
  if (fit.samples < 4) fail(ErrorCode::kNoDecay, "fit_sup_scaling: too few samples above the floor");
  const std::size_t half = ratio.size() / 2;
  for (std::size_t i = 0; i < half; ++i) fit.A = std::max(fit.A, ratio[i]);
  for (std::size_t i = half; i < ratio.size(); ++i) fit.max_ratio_tail = std::max(fit.max_ratio_tail, ratio[i]);
  fit.holds = fit.max_ratio_tail <= fit.A * (1.0 + 1e-9);
  return fit;
}

RateCheck check_average_rate(const FlowTrace& trace) {
  const bool modified = trace.config.x_strength != 0.0;
  RateCheck out;
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    const auto& p = trace.records[i].diag;
    const auto& q = trace.records[i + 1].diag;
    const double h = q.t - p.t;
    const double ap = modified ? *p.a_x : p.a, aq = modified ? *q.a_x : q.a;
    const double zp = modified ? p.Z_w : p.Z, zq = modified ? q.Z_w : q.Z;
    const double dev = std::abs((aq - ap) / h - 0.5 * (zp + zq));
    out.max_deviation = std::max(out.max_deviation, dev);
    out.max_step = std::max(out.max_step, h);
    const double excess = dev - std::abs(zq - zp) - 1e-8;
    out.max_excess = i == 0 ? excess : std::max(out.max_excess, excess);
  }
  out.consistent = out.max_excess <= 0.0;
  return out;
}

FlowTrace richardson_in_time(const FlowTrace& coarse, const FlowTrace& fine, int order) {
  if (coarse.records.size() != fine.records.size() || coarse.config.n != fine.config.n)
    fail(ErrorCode::kMismatch, "richardson_in_time: traces do not share grid and samples");
  const double w = std::ldexp(1.0, order);
  FlowTrace out = fine;
  out.dt_used = 0.0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    if (std::abs(coarse.records[i].t - fine.records[i].t) > 1e-12)
      fail(ErrorCode::kMismatch, "richardson_in_time: sample times differ");
    FlowRecord& r = out.records[i];
    r.phi = (w * fine.records[i].phi - coarse.records[i].phi) / (w - 1.0);
    r.hash = out.state(i).hash();
    r.spectrum.reset();
  }
  return out;
}

ReparamResult reparametrize_compare(const FlowTrace& krf, const FlowTrace& mkrf, double c) {
  if (krf.config.backend.kind != mkrf.config.backend.kind || krf.config.n != mkrf.config.n ||
      krf.records.size() != mkrf.records.size())
    fail(ErrorCode::kMismatch, "reparametrize_compare: traces do not share backend, grid and samples");
  if (krf.config.x_strength != 0.0 || mkrf.config.x_strength != c)
    fail(ErrorCode::kMismatch, "reparametrize_compare: expected a plain KRF trace and an MKRF trace with strength c");
  for (std::size_t i = 0; i < krf.records.size(); ++i) {
    if (std::abs(krf.records[i].t - mkrf.records[i].t) > 1e-12)
      fail(ErrorCode::kMismatch, "reparametrize_compare: sample times differ");
    if (krf.records[i].phi.size() != mkrf.records[i].phi.size())
      fail(ErrorCode::kMismatch, "reparametrize_compare: snapshot sizes differ");
  }

  ReparamResult best;
  const bool cp1 = krf.config.backend.kind == BackendKind::kCp1Conformal;
  if (c == 0.0 || !cp1) {
    // F1: in momentum coordinates the automorphism acts trivially on Theta
    best.group = cp1 ? "identity" : "identity on the moment profile";
    for (std::size_t i = 0; i < krf.records.size(); ++i) {
      const Vec dk = krf.state(i).conformal(), dm = mkrf.state(i).conformal();
      best.max_deviation = std::max(best.max_deviation, (dk - dm).cwiseAbs().maxCoeff());
    }
    return best;
  }

  best.max_deviation = std::numeric_limits<double>::infinity();
  const Grid& g = *krf.grid;
  const Vec& x = g.nodes();
  for (int sign : {1, -1}) {
    double dev = 0.0;
    for (std::size_t i = 0; i < krf.records.size(); ++i) {
      const MetricState sk = krf.state(i), sm = mkrf.state(i);
      const double big_t = std::tanh(sign * c * krf.records[i].t / 2.0);
      for (int j = 0; j < g.size(); ++j) {
        const double xp = (x[j] + big_t) / (1.0 + x[j] * big_t);
        const double pulled = g.interpolate(sk.conformal(), xp) * (1.0 - xp * xp) / (1.0 - x[j] * x[j]);
        dev = std::max(dev, std::abs(pulled - sm.conformal()[j]));
      }
    }
    if (dev < best.max_deviation) {
      best.max_deviation = dev;
      best.sign = sign;
    }
  }
  std::ostringstream os;
  os << "real flow of X (Re X), orientation " << (best.sign > 0 ? "+" : "-");
  best.group = os.str();
  return best;
}

}  // namespace rlab
