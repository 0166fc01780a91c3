#include "ricci_lab/flow.hpp"
#include "ricci_lab/potentials.hpp"
#include "support.hpp"

using namespace rlab;
using testing::kVolCp1;
using testing::kVolF1;

namespace {

MetricState round_state(int n) { return initial_metric(make_grid(Backend::cp1(), n), MetricDescriptor::canonical()); }

double e_mean(const MetricState& s, const Vec& f, double sign) {
  return s.integral((sign * f.array()).exp().matrix()) / volume(s);
}

PotentialSet manual_potentials(const MetricState& s, const Vec& raw) {
  PotentialSet p;
  p.u = Field::real(normalize_ricci_potential(s, raw));
  p.a = compute_averages(s, p.u).a;
  p.osc_u = p.u.re.maxCoeff() - p.u.re.minCoeff();
  return p;
}

}  // namespace

TEST_CASE("ricci potential") {
  const MetricState round = round_state(48);
  double res = 1.0;
  const Field u0 = solve_ricci_potential(round, &res);
  CHECK(u0.re.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(res <= 1e-9);

  const MetricState p = perturb_metric(round_state(64), 0.3, 2);
  const Field u = solve_ricci_potential(p, &res);
  CHECK(res <= 1e-9);
  CHECK(u.re.cwiseAbs().maxCoeff() > 0.1);
  CHECK(std::abs(e_mean(p, u.re, -1.0) - 1.0) <= 1e-10);
  // s + Delta u = n
  const Vec check = scalar_curvature(p).re + p.laplacian(u.re);
  CHECK((check.array() - 1.0).abs().maxCoeff() <= 1e-9);

  // 2N oracle at shared interpolation points
  const MetricState p2 = perturb_metric(round_state(128), 0.3, 2);
  const Field u2 = solve_ricci_potential(p2);
  const Vec probe = Vec::LinSpaced(7, -0.9, 0.9);
  const Vec a = p.grid().interpolation_to(probe) * u.re;
  const Vec b = p2.grid().interpolation_to(probe) * u2.re;
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-8);

  const MetricState f1 = initial_metric(make_grid(Backend::f1(), 32), MetricDescriptor::canonical());
  const Field uf = solve_ricci_potential(f1, &res);
  CHECK(res <= 1e-9);
  CHECK(std::abs(e_mean(f1, uf.re, -1.0) - 1.0) <= 1e-10);
}

TEST_CASE("poisson solvability") {
  const MetricState round = round_state(32);
  CHECK_ERROR_CODE(solve_weighted_poisson(round, Vec::Ones(32)), ErrorCode::kSolvability);
}

TEST_CASE("normalization idempotence") {
  const MetricState p = perturb_metric(round_state(48), 0.3, 2);
  const Vec u = solve_ricci_potential(p).re;
  CHECK((normalize_ricci_potential(p, u) - u).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("holomorphy potential") {
  const MetricState round = round_state(48);
  CHECK(solve_holomorphy_potential(round, 0.0).re.cwiseAbs().maxCoeff() == 0.0);

  // c = 1 gives range [-1, 1]: theta = x - ln sinh 1
  const Field th = solve_holomorphy_potential(round, 1.0);
  const Vec& x = round.grid().nodes();
  CHECK((th.re - (x.array() - std::log(std::sinh(1.0))).matrix()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(std::log(std::sinh(1.0)) == doctest::Approx(0.161440).epsilon(1e-5));
  CHECK(std::abs(e_mean(round, th.re, 1.0) - 1.0) <= 1e-10);

  // F1: d theta / d tau = c, so theta is affine in the moment coordinate
  const MetricState f1 = initial_metric(make_grid(Backend::f1(), 32), MetricDescriptor::canonical());
  const Field tf = solve_holomorphy_potential(f1, 1.0);
  const Vec& tau = f1.grid().nodes();
  const Vec resid = tf.re - (tau.array() - tau[0] + tf.re[0]).matrix();
  CHECK(resid.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(std::abs(e_mean(f1, tf.re, 1.0) - 1.0) <= 1e-10);
}

TEST_CASE("averages") {
  const MetricState round = round_state(32);
  const Field zero = Field::real(Vec::Zero(32));
  CHECK(compute_averages(round, zero).a == 0.0);
  CHECK_ERROR_CODE(compute_averages(round, Field::real(Vec::Constant(32, 0.5))), ErrorCode::kInvalidArgument);

  for (double amp : {0.1, 0.3}) {
    const MetricState p = perturb_metric(round_state(48), amp, 2);
    const PotentialSet pots = compute_potentials(p, 0.7);
    CHECK(pots.a <= 1e-12);
    REQUIRE(pots.a_x.has_value());
    CHECK(*pots.a_x <= 1e-12);
    CHECK((pots.w->re - pots.u.re - pots.theta->re).cwiseAbs().maxCoeff() <= 1e-15);
    const Vec emu = (-pots.u.re.array()).exp().matrix();
    CHECK(std::abs(pots.a - p.integral(pots.u.re.cwiseProduct(emu)) / volume(p)) <= 1e-12);
    CHECK(std::abs(*pots.a_x - p.integral(pots.w->re.cwiseProduct(emu)) / volume(p)) <= 1e-12);
    CHECK(std::abs(e_mean(p, pots.theta->re, 1.0) - 1.0) <= 1e-10);
  }
}

TEST_CASE("diagnostics") {
  const MetricState round = round_state(48);
  const DiagnosticsRecord d0 = diagnostics(round, compute_potentials(round, 0.0));
  CHECK(d0.Y == 0.0);
  CHECK(d0.Z == 0.0);
  CHECK(d0.ratio_degenerate);

  const Vec& x = round.grid().nodes();
  const DiagnosticsRecord dx = diagnostics(round, manual_potentials(round, 1e-3 * x));
  CHECK_FALSE(dx.ratio_degenerate);
  CHECK(dx.poincare_ratio == doctest::Approx(1.0).epsilon(1e-6));

  // the deviation is first order in epsilon here (about 0.43 epsilon)
  const Vec p2 = (1.5 * x.array().square() - 0.5).matrix();
  const DiagnosticsRecord dp = diagnostics(round, manual_potentials(round, 1e-4 * p2));
  CHECK(dp.poincare_ratio == doctest::Approx(3.0).epsilon(1e-4));

  for (double amp : {0.1, 0.3}) {
    const MetricState p = perturb_metric(round_state(48), amp, 2);
    const DiagnosticsRecord d = diagnostics(p, compute_potentials(p, 0.0));
    CHECK(d.Y >= 0.0);
    CHECK(d.Z >= -1e-10 * kVolCp1);
    CHECK(d.osc_u >= 0.0);
  }
  const MetricState f1 = initial_metric(make_grid(Backend::f1(), 32), MetricDescriptor::canonical());
  const DiagnosticsRecord df = diagnostics(f1, compute_potentials(f1, -0.5));
  CHECK(df.Z >= -1e-10 * kVolF1);
  CHECK(df.Z_w >= -1e-10 * kVolF1);
}

TEST_CASE("perelman monitor") {
  FlowConfig cfg;
  cfg.n = 32;
  cfg.t_end = 2.0;
  cfg.dt = 0.02;
  const FlowTrace round = run_flow(cfg);
  std::vector<DiagnosticsRecord> d;
  for (const auto& r : round.records) d.push_back(r.diag);
  const PerelmanReport pr = perelman_monitor(d, 1e-8);
  CHECK(pr.pass());
  CHECK(pr.max_u <= 1e-8);
  CHECK(pr.max_lap_u <= 1e-8);

  cfg.initial = MetricDescriptor::perturbed(0.3, 2);
  cfg.t_end = 10.0;
  const FlowTrace pert = run_flow(cfg);
  d.clear();
  for (const auto& r : pert.records) d.push_back(r.diag);
  const PerelmanReport pp = perelman_monitor(d, 1e3);
  CHECK(pp.pass());
  CHECK(std::isfinite(pp.max_lap_u));
  CHECK(pp.tail_nonincreasing);

  d[5].sup.grad_u = std::numeric_limits<double>::quiet_NaN();
  const PerelmanReport bad = perelman_monitor(d, 1e3);
  CHECK_FALSE(bad.pass());
  REQUIRE(bad.nonfinite_at.has_value());
  CHECK(*bad.nonfinite_at == 5);
}
