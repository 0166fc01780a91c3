#include "ricci_lab/geometry.hpp"
#include "support.hpp"

using namespace rlab;
using testing::kPi;
using testing::kVolCp1;
using testing::kVolF1;

TEST_CASE("backends") {
  const Backend cp1 = Backend::cp1();
  CHECK(cp1.n == 1);
  REQUIRE(cp1.h0_dim() == 3);
  int modes = 0;
  for (const auto& f : cp1.basis) modes |= 1 << (f.mode + 1);
  CHECK(modes == 0b111);
  CHECK(Backend::f1().n == 2);
  CHECK(backend_from_name("F1_MOMENTUM").kind == BackendKind::kF1Momentum);
  CHECK_ERROR_CODE(backend_from_name("CP2"), ErrorCode::kInvalidArgument);
}

TEST_CASE("make_grid") {
  const GridPtr g = make_grid(Backend::cp1(), 64);
  REQUIRE(g->size() == 64);
  const Vec& x = g->nodes();
  for (int i = 0; i < 64; ++i) {
    CHECK(x[i] > -1.0);
    CHECK(x[i] < 1.0);
    CHECK(g->weights()[i] > 0.0);
    if (i) CHECK(x[i] > x[i - 1]);
  }
  CHECK(g->weights().sum() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g->weights().dot(x.cwiseProduct(x)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const GridPtr f = make_grid(Backend::f1(), 64);
  CHECK(f->weights().sum() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f->nodes().minCoeff() > 1.0);
  CHECK(f->nodes().maxCoeff() < 3.0);

  CHECK_ERROR_CODE(make_grid(Backend::cp1(), 15), ErrorCode::kInvalidArgument);
}

TEST_CASE("canonical metrics") {
  const GridPtr g = make_grid(Backend::cp1(), 64);
  const MetricState round = initial_metric(g, MetricDescriptor::canonical());
  CHECK(round.phi().cwiseAbs().maxCoeff() == 0.0);
  CHECK(volume(round) == doctest::Approx(kVolCp1).epsilon(1e-12));
  const Field s = scalar_curvature(round);
  CHECK((s.re.array() - 1.0).abs().maxCoeff() <= 1e-10);

  const GridPtr gf = make_grid(Backend::f1(), 32);
  const MetricState f1 = initial_metric(gf, MetricDescriptor::canonical());
  CHECK(f1.moment().minCoeff() > 0.0);
  CHECK(volume(f1) == doctest::Approx(kVolF1).epsilon(1e-10));
  // Theta' = +2 at tau = 1 and -2 at tau = 3
  const Vec slope = gf->diff() * f1.moment();
  CHECK(slope[0] == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(slope[31] == doctest::Approx(-2.0).epsilon(1e-2));
  const Field sf = scalar_curvature(f1);
  CHECK(std::abs(f1.integral(sf.re) / volume(f1) - 2.0) <= 1e-9);
}

TEST_CASE("perturb_metric") {
  const GridPtr g = make_grid(Backend::cp1(), 64);
  const MetricState round = initial_metric(g, MetricDescriptor::canonical());
  CHECK(perturb_metric(round, 0.0, 3).hash() == round.hash());

  const MetricState p = perturb_metric(round, 0.3, 2);
  CHECK(p.conformal().minCoeff() > 0.0);
  CHECK(std::abs(volume(p) - kVolCp1) <= 1e-10 * kVolCp1);
  CHECK_ERROR_CODE(perturb_metric(round, 10.0, 2), ErrorCode::kPositivity);
  CHECK_ERROR_CODE(perturb_metric(round, 0.1, 1), ErrorCode::kInvalidArgument);

  const Field s = scalar_curvature(p);
  CHECK(s.re.maxCoeff() - s.re.minCoeff() > 0.1);
  CHECK(std::abs(p.integral((s.re.array() - 1.0).matrix())) <= 1e-9 * kVolCp1);

  const GridPtr gf = make_grid(Backend::f1(), 32);
  const MetricState pf = perturb_metric(initial_metric(gf, MetricDescriptor::canonical()), 0.05, 2);
  CHECK(std::abs(volume(pf) - kVolF1) <= 1e-10 * kVolF1);
  const Field sf = scalar_curvature(pf);
  CHECK(std::abs(pf.integral((sf.re.array() - 2.0).matrix())) <= 1e-9 * kVolF1);
}

TEST_CASE("integrate") {
  const GridPtr g = make_grid(Backend::cp1(), 48);
  const MetricState round = initial_metric(g, MetricDescriptor::canonical());
  const Vec& x = g->nodes();
  CHECK(integrate(Field::real(Vec::Ones(48)), round) == doctest::Approx(4.0 * kPi).epsilon(1e-12));
  CHECK(std::abs(integrate(Field::real(x), round)) <= 1e-13);
  CHECK(integrate(Field::real(x.cwiseProduct(x)), round) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-12));
  CHECK(integrate(Field::real(Vec::Ones(48), 2), round) == 0.0);

  const Field one = Field::real(Vec::Ones(48));
  CHECK_ERROR_CODE(integrate(one, round, Weight::kExpMinusU), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(integrate(one, round, Weight::kExpTheta), ErrorCode::kInvalidArgument);
  const Field zero = Field::real(Vec::Zero(48));
  CHECK(integrate(one, round, Weight::kExpMinusU, &zero) == doctest::Approx(4.0 * kPi).epsilon(1e-12));
}

TEST_CASE("grad_norm_sq") {
  const GridPtr g = make_grid(Backend::cp1(), 48);
  const MetricState round = initial_metric(g, MetricDescriptor::canonical());
  const Vec& x = g->nodes();

  const Field gx = grad_norm_sq(Field::real(x), round);
  CHECK((gx.re - 0.5 * (Vec::Ones(48) - x.cwiseProduct(x))).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(round.integral(gx.re) - round.integral(x.cwiseProduct(x))) <= 1e-10);

  CHECK(grad_norm_sq(Field::real(Vec::Constant(48, 3.0)), round).re.cwiseAbs().maxCoeff() <= 1e-12);

  const Vec p2 = (1.5 * x.array().square() - 0.5).matrix();
  const double num = round.integral(grad_norm_sq(Field::real(p2), round).re);
  CHECK(num == doctest::Approx(3.0 * round.integral(p2.cwiseProduct(p2))).epsilon(1e-9));
}

TEST_CASE("scalar curvature refinement") {
  const MetricDescriptor d = MetricDescriptor::perturbed(0.3, 2);
  const Vec probe = Vec::LinSpaced(9, -0.8, 0.8);
  auto sample = [&](int n) {
    const GridPtr g = make_grid(Backend::cp1(), n);
    const MetricState s = initial_metric(g, d);
    return Vec(g->interpolation_to(probe) * scalar_curvature(s).re);
  };
  const Vec s16 = sample(16), s24 = sample(24), s48 = sample(48);
  const double e1 = (s16 - s48).cwiseAbs().maxCoeff();
  const double e2 = (s24 - s48).cwiseAbs().maxCoeff();
  CHECK(e2 < e1);
  CHECK(std::log(e1 / e2) / std::log(24.0 / 16.0) >= 2.0);
}

TEST_CASE("hash and time") {
  const GridPtr g = make_grid(Backend::cp1(), 32);
  const MetricState a = initial_metric(g, MetricDescriptor::perturbed(0.05, 3));
  const MetricState b = initial_metric(g, MetricDescriptor::perturbed(0.05, 3));
  CHECK(a.hash() == b.hash());
  CHECK(a.at_time(1.5).time() == 1.5);
  CHECK(initial_metric(g, MetricDescriptor::perturbed(0.05, 2)).hash() != a.hash());
}
