#include "ricci_lab/potentials.hpp"
#include "ricci_lab/spectral.hpp"
#include "support.hpp"

using namespace rlab;

namespace {

MetricState cp1(int n, double amp = 0.0) {
  const auto d = amp == 0.0 ? MetricDescriptor::canonical() : MetricDescriptor::perturbed(amp, 2);
  return initial_metric(make_grid(Backend::cp1(), n), d);
}

const ModeSpectrum& mode_of(const SpectrumReport& r, int m) {
  for (const auto& s : r.modes)
    if (s.mode == m) return s;
  FAIL("mode missing");
  return r.modes.front();
}

}  // namespace

TEST_CASE("weighted laplacian assembly") {
  const MetricState round = cp1(48);
  const Field u = solve_ricci_potential(round);
  for (int m : {0, 1, 2}) {
    const WeightedOperator op = assemble_weighted_laplacian(round, u, m);
    CHECK((op.symmetric - op.symmetric.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // u = 0: L = -Delta on axisymmetric functions
  const ModeEigensystem es = mode_eigensystem(round, u, 0);
  const Mat lap = round.laplacian_matrix();
  for (int k = 1; k < 4; ++k) {
    const Vec f = es.profiles.col(k);
    CHECK((-lap * f - es.eigenvalues[k] * f).cwiseAbs().maxCoeff() <= 1e-8 * f.cwiseAbs().maxCoeff());
  }
  CHECK(mode_eigensystem(round, u, 1).eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-8));

  const MetricState p = cp1(48, 0.3);
  const WeightedOperator op = assemble_weighted_laplacian(p, solve_ricci_potential(p), 1);
  CHECK((op.symmetric - op.symmetric.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("round spectrum") {
  const MetricState round = cp1(48);
  const SpectrumReport r = spectrum_report(round, solve_ricci_potential(round), 3);
  for (int m = -3; m <= 3; ++m) {
    const auto& ev = mode_of(r, m).eigenvalues;
    // mode m carries k(k+1)/2 for k >= |m|, with the constant in mode 0
    for (int k = std::max(1, std::abs(m)); k <= 5; ++k) {
      const int idx = m == 0 ? k : k - std::abs(m);
      CHECK(ev[idx] == doctest::Approx(0.5 * k * (k + 1)).epsilon(1e-8));
    }
  }
  CHECK(r.band.size() == 3);
  CHECK(r.band_width <= 1e-8);
  CHECK(r.lambda == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(r.smallest_nonzero == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.min_eigenvalue >= -1e-9);
  CHECK(r.kernel_dim == 3);
  CHECK(r.kernel_dim_tilde == 3);
  // mu pinned by the dense eigensolve: 2 on the round sphere, at the bound lambda - 1
  CHECK(r.mu == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(r.mu <= r.lambda - 1.0 + 1e-8);
  CHECK(std::abs(r.mu_tilde - r.mu) <= 1e-10);
}

TEST_CASE("perturbed spectrum") {
  const MetricState p48 = cp1(48, 0.3), p96 = cp1(96, 0.3);
  const SpectrumReport a = spectrum_report(p48, solve_ricci_potential(p48), 2);
  const SpectrumReport b = spectrum_report(p96, solve_ricci_potential(p96), 2);
  CHECK(a.band.size() == 3);
  CHECK(a.band_width <= a.band_tol);
  CHECK(a.lambda > 1.0);
  CHECK(a.lambda < 3.0);
  CHECK(std::abs(a.lambda - b.lambda) <= 1e-6);
  CHECK(a.smallest_nonzero >= 1.0 - a.band_tol);
  CHECK(a.min_eigenvalue >= -1e-9);
  CHECK(a.kernel_dim == 3);

  const double eo = std::exp(solve_ricci_potential(p48).re.maxCoeff() - solve_ricci_potential(p48).re.minCoeff());
  CHECK(a.mu_tilde >= a.mu / eo * (1.0 - 1e-8));
  CHECK(a.mu_tilde <= a.mu * eo * (1.0 + 1e-8));
  CHECK(a.mu > 0.0);
}

TEST_CASE("f1 spectrum") {
  const MetricState f = initial_metric(make_grid(Backend::f1(), 32), MetricDescriptor::canonical());
  const SpectrumReport r = spectrum_report(f, solve_ricci_potential(f), 0);
  CHECK(r.band.size() == 1);
  CHECK(r.lambda > 1.0);
  CHECK(r.kernel_dim == 1);
  CHECK(r.mu > 0.0);
}

TEST_CASE("vector field spectrum") {
  const MetricState round = cp1(48);
  const Field u = solve_ricci_potential(round);
  const VectorFieldSpectrum dv = vector_field_spectrum(round, u, Weight::kDv, 2);
  const VectorFieldSpectrum eu = vector_field_spectrum(round, u, Weight::kExpMinusU, 2);
  CHECK(dv.kernel_dim == 3);
  CHECK(std::abs(dv.smallest_positive - eu.smallest_positive) <= 1e-12);
  CHECK_ERROR_CODE(vector_field_spectrum(round, u, Weight::kExpTheta, 2), ErrorCode::kInvalidArgument);
}

TEST_CASE("projection onto h0") {
  const MetricState round = cp1(48);
  const Vec& x = round.grid().nodes();

  const Projection px = project_h0(gradient_field(round, Field::real(x)), round, Weight::kDv);
  CHECK(std::sqrt(inner_product(round, px.residual, px.residual, Weight::kDv).real()) <= 1e-9);
  CHECK(px.cross <= 1e-10);

  VectorField high;
  high.components.push_back(Field::real((Vec::Ones(48) - x.cwiseProduct(x)).array().pow(2.5).matrix(), 5));
  const Projection ph = project_h0(high, round, Weight::kDv);
  for (const auto& c : ph.coefficients) CHECK(std::abs(c) <= 1e-14);

  for (double amp : {0.1, 0.3}) {
    const MetricState p = cp1(64, amp);
    const Field u = solve_ricci_potential(p);
    const Projection pu = project_h0(gradient_field(p, u), p, Weight::kDv);
    CHECK(std::sqrt(inner_product(p, pu.projection, pu.projection, Weight::kDv).real()) <= 1e-8);
    const Projection pw = project_h0(gradient_field(p, u), p, Weight::kExpMinusU, &u);
    CHECK(pw.cross <= 1e-10);
    // <pi_u grad u, pi_u grad u>_0 <= <V, V>_0
    const double pp = inner_product(p, pw.projection, pw.projection, Weight::kDv).real();
    const double vv = inner_product(p, pw.residual, pw.residual, Weight::kDv).real();
    CHECK(pp <= vv + 1e-10);
  }

  // the gradient of the holomorphy potential is the generator itself
  const MetricState p = cp1(48, 0.2);
  const Field th = solve_holomorphy_potential(p, 1.0);
  const Projection pt = project_h0(gradient_field(p, th), p, Weight::kExpTheta, nullptr, &th);
  CHECK(std::abs(pt.coefficients[0] - std::complex<double>(1.0, 0.0)) <= 1e-10);
  CHECK(std::sqrt(std::abs(inner_product(p, pt.residual, pt.residual, Weight::kDv))) <= 1e-9);
}

TEST_CASE("eigenbasis decomposition") {
  const MetricState round = cp1(48);
  const Decomposition d0 = decompose_against_eigenbasis(Field::real(Vec::Zero(48)), round);
  CHECK(d0.band.cwiseAbs().maxCoeff() == 0.0);
  CHECK(d0.higher.cwiseAbs().maxCoeff() == 0.0);

  const Vec& x = round.grid().nodes();
  const Field zero = Field::real(Vec::Zero(48));
  const Decomposition dx = decompose_against_eigenbasis(round, zero, 1e-3 * x);
  CHECK(dx.higher.cwiseAbs().maxCoeff() <= 1e-6 * dx.band.cwiseAbs().maxCoeff());
  CHECK(dx.reconstruction_error <= 1e-9);
  const Vec p2 = (1.5 * x.array().square() - 0.5).matrix();
  const Decomposition dp = decompose_against_eigenbasis(round, zero, 1e-3 * p2);
  CHECK(dp.band.cwiseAbs().maxCoeff() <= 1e-6 * dp.higher.cwiseAbs().maxCoeff());

  const MetricState p = cp1(48, 0.3);
  const Decomposition du = decompose_against_eigenbasis(solve_ricci_potential(p), p);
  CHECK(du.reconstruction_error <= 1e-9);
}

TEST_CASE("bochner identity") {
  for (double amp : {0.0, 0.2, 0.3}) {
    const MetricState p = cp1(48, amp);
    const Field u = solve_ricci_potential(p);
    const SpectrumReport r = spectrum_report(p, u, 2);
    const BochnerCheck b = bochner_check(p, u, r);
    CHECK(b.relative_residual <= 1e-6);
    CHECK(b.lhs > 0.0);
    // lambda >= 1 + e^{-osc} mu
    const double osc = u.re.maxCoeff() - u.re.minCoeff();
    CHECK(r.lambda >= 1.0 + std::exp(-osc) * r.mu - 1e-6);
  }
}
