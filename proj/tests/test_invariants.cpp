#include <cmath>

#include "ricci_lab/flow.hpp"
#include "ricci_lab/invariants.hpp"
#include "support.hpp"

using namespace rlab;
using testing::kSolitonF1;
using testing::kVolCp1;
using testing::kVolF1;

namespace {

// F_{cX}(X) on the round sphere, 2 pi (c^2/2) int (1-x^2) e^{cx} dx / sinh c (mpmath, 30 digits)
constexpr double kRoundModifiedC1 = 3.93371741295633101881602047383;
constexpr double kRoundModifiedC05 = 2.06029936052927866663716158699;

MetricState cp1(int n, double amp = 0.0) {
  const auto d = amp == 0.0 ? MetricDescriptor::canonical() : MetricDescriptor::perturbed(amp, 2);
  return initial_metric(make_grid(Backend::cp1(), n), d);
}

MetricState f1(int n) { return initial_metric(make_grid(Backend::f1(), n), MetricDescriptor::canonical()); }

}  // namespace

TEST_CASE("futaki invariant") {
  const MetricState round = cp1(48);
  const Field u0 = solve_ricci_potential(round);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(futaki(round, u0, i)) <= 1e-12);

  const MetricState p1 = cp1(64, 0.1), p2 = cp1(64, 0.3);
  const double f1v = futaki(p1, solve_ricci_potential(p1), 0).real();
  const double f2v = futaki(p2, solve_ricci_potential(p2), 0).real();
  CHECK(std::abs(f1v) <= 1e-8 * kVolCp1);
  CHECK(std::abs(f2v) <= 1e-8 * kVolCp1);
  CHECK(std::abs(f1v - f2v) <= 1e-8 * kVolCp1);

  // F1 is not Kähler-Einstein
  const MetricState f = f1(32);
  CHECK(std::abs(futaki(f, solve_ricci_potential(f), 0).real()) > 1.0);
  CHECK_ERROR_CODE(futaki(round, u0, 7), ErrorCode::kInvalidArgument);
}

TEST_CASE("modified futaki") {
  const MetricState round = cp1(64);
  const Field u0 = solve_ricci_potential(round);
  CHECK(soliton_function(round, u0, 1.0) == doctest::Approx(kRoundModifiedC1).epsilon(1e-10));
  CHECK(soliton_function(round, u0, 0.5) == doctest::Approx(kRoundModifiedC05).epsilon(1e-10));
  CHECK(soliton_function(round, u0, -0.5) == doctest::Approx(-kRoundModifiedC05).epsilon(1e-10));

  // c = 0 reduces to the Futaki invariant
  const MetricState p = cp1(64, 0.3);
  const Field u = solve_ricci_potential(p);
  CHECK(std::abs(soliton_function(p, u, 0.0) - futaki(p, u, 0).real()) <= 1e-12);
  const Field th0 = solve_holomorphy_potential(p, 0.0);
  CHECK(std::abs(modified_futaki(p, u, th0, 0) - futaki(p, u, 0)) <= 1e-12);

  // class invariant
  CHECK(std::abs(soliton_function(p, u, 0.5) - kRoundModifiedC05) <= 1e-6);
}

TEST_CASE("soliton coefficient") {
  const SolitonCoefficient s32 = soliton_coefficient(f1(32));
  const SolitonCoefficient s64 = soliton_coefficient(f1(64));
  CHECK(std::abs(s64.c - kSolitonF1) <= 1e-8);
  CHECK(std::abs(s32.c - s64.c) <= 1e-6);
  CHECK(std::abs(s64.residual) <= 1e-8);
  CHECK(s64.monotone);
  CHECK(s64.bracket_lo <= s64.c);
  CHECK(s64.c <= s64.bracket_hi);

  // round CP1 is already Kähler-Einstein
  CHECK(std::abs(soliton_coefficient(cp1(32)).c) <= 1e-8);

  CHECK_ERROR_CODE(soliton_coefficient(f1(32), 0.0, 2.0), ErrorCode::kBracket);
}

TEST_CASE("soliton state") {
  const MetricState s = soliton_state(make_grid(Backend::f1(), 64), kSolitonF1);
  CHECK(std::abs(volume(s) - kVolF1) <= 1e-10 * kVolF1);
  const PotentialSet p = compute_potentials(s, kSolitonF1);
  CHECK(p.sup.w <= 1e-6);
  CHECK(std::abs(soliton_function(s, p.u, kSolitonF1)) <= 1e-8);

  CHECK(soliton_state(make_grid(Backend::cp1(), 32), 0.0).phi().cwiseAbs().maxCoeff() == 0.0);
  CHECK_ERROR_CODE(soliton_state(make_grid(Backend::cp1(), 32), 0.5), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(soliton_state(make_grid(Backend::f1(), 32), 0.3), ErrorCode::kInvalidArgument);
}

TEST_CASE("delta prime") {
  CHECK(delta_prime(1.0, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(delta_prime(2.0, std::log(2.0)) == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK(delta_prime(0.0, 3.0) == 0.0);
  CHECK_ERROR_CODE(delta_prime(-1.0, 0.0), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(delta_prime(1.0, -0.1), ErrorCode::kInvalidArgument);
}

TEST_CASE("conditions at the round metric") {
  const MetricState round = cp1(48);
  const PotentialSet p = compute_potentials(round, 0.0);
  const SpectrumReport sp = spectrum_report(round, p.u, 2);
  const ConditionReport r = check_conditions(round, p, sp, InitialAverages{p.a, std::nullopt});
  CHECK(r.ratio_degenerate);
  CHECK(r.futaki_vanishes);
  CHECK(r.inequalities_pass());
  CHECK(r.delta_prime == doctest::Approx(delta_prime(2.0, 0.0)));

  SpectrumReport bad = sp;
  bad.mu = std::numeric_limits<double>::quiet_NaN();
  CHECK_ERROR_CODE(check_conditions(round, p, bad), ErrorCode::kInvalidArgument);
}

TEST_CASE("conditions along a perturbed run") {
  FlowConfig cfg;
  cfg.n = 48;
  cfg.initial = MetricDescriptor::perturbed(0.3, 2);
  cfg.t_end = 10.0;
  cfg.dt = 0.01;
  const FlowTrace tr = run_flow(cfg);
  const InitialAverages init{tr.records.front().diag.a, std::nullopt};
  const std::size_t stride = tr.records.size() / 10;
  int evaluated = 0;
  for (std::size_t i = 0; i < tr.records.size(); i += stride) {
    const MetricState s = tr.state(i);
    const PotentialSet p = compute_potentials(s, 0.0);
    const SpectrumReport sp = spectrum_report(s, p.u, 2);
    const ConditionReport r = check_conditions(s, p, sp, init);
    INFO("t = " << r.t);
    CHECK(r.inequalities_pass());
    CHECK(r.margin_lambda_bound >= -1e-6);
    CHECK(r.margin_sandwich >= -1e-6);
    CHECK(r.margin_averages >= -1e-12);
    CHECK(r.pi0_grad_u <= 1e-8);
    CHECK(r.bochner_residual <= 1e-6);
    if (!r.ratio_degenerate) {
      CHECK(r.margin_ratio >= -1e-6);
      CHECK(r.delta_prime == doctest::Approx(delta_prime(sp.lambda - 1.0, r.osc_u)).epsilon(1e-14));
    }
    ++evaluated;
  }
  CHECK(evaluated >= 10);
}

TEST_CASE("conditions with a non-soliton field") {
  const MetricState p = cp1(48, 0.3);
  const PotentialSet pots = compute_potentials(p, 0.5);
  const SpectrumReport sp = spectrum_report(p, pots.u, 2);
  const ConditionReport r = check_conditions(p, pots, sp, InitialAverages{pots.a, pots.a_x});
  CHECK(r.futaki_vanishes);
  CHECK_FALSE(r.modified_futaki_vanishes);
  CHECK(std::abs(r.modified_futaki - kRoundModifiedC05) <= 1e-6);
  CHECK(r.pass_averages);
  CHECK(r.inequalities_pass());
}
