#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "srgeom/bochner.hpp"
#include "srgeom/curvature.hpp"
#include "support.hpp"

using namespace srg;
using namespace srg::test;

namespace {

ScalarField field(const Polynomial& p, Backend b = Backend::Exact) { return ScalarField::polynomial("p", p, b); }

}  // namespace

TEST_CASE("horizontal identity on hand-computed Heisenberg fields") {
  const Model h = build_model("heisenberg");
  const ChartPoint x{0.7, -0.2, 0.5};
  CHECK(std::abs(horizontal_bochner_residual(h.s(), field(poly(3, {{{1, 1, 0}, 1.0}})), x)) < 1e-13);
  CHECK(std::abs(horizontal_bochner_residual(h.s(), field(poly(3, {{{0, 0, 1}, 1.0}})), x)) < 1e-13);
  CHECK(r_value(h.s(), field(poly(3, {{{0, 0, 1}, 1.0}})), x) == doctest::Approx(0.5));
}

TEST_CASE("vertical identity examples") {
  const Model h = build_model("heisenberg");
  const ScalarField x2z = field(poly(3, {{{2, 0, 1}, 1.0}}));
  const ChartPoint x{1.0, 0.0, 0.0};
  CHECK(forms(h.s(), x2z, x).gamma2Z == doctest::Approx(8.0));
  CHECK(std::abs(vertical_bochner_residual(h.s(), x2z, x)) < 1e-13);
  const FormValue xy = forms(h.s(), field(poly(3, {{{1, 1, 0}, 1.0}})), x);
  CHECK(xy.gamma2Z == 0.0);

  const Model su2 = build_model("su2");
  for (std::uint64_t k = 0; k < 3; ++k) {
    const ScalarField f = field(random_field(su2.descriptor, 3, 3, 41, k));
    for (const auto& y : box_points(su2.descriptor, 20, 41)) CHECK(std::abs(vertical_bochner_residual(su2.s(), f, y)) <= 1e-9);
  }
}

TEST_CASE("sphere cubic fields satisfy the horizontal identity") {
  const Model s = build_model("sphere2");
  for (std::uint64_t k = 0; k < 5; ++k) {
    const Polynomial p = random_field(s.descriptor, 2, 3, 42, k);
    for (const auto& y : box_points(s.descriptor, 10, 42)) {
      CHECK(std::abs(horizontal_bochner_residual(s.s(), field(p), y)) <= 1e-9);
      CHECK(std::abs(horizontal_bochner_residual(s.s(), field(p, Backend::FiniteDifference), y)) <= 1e-5);
    }
  }
}

TEST_CASE("both residuals stay at rounding level on every model") {
  for (const auto& name : builtin_model_names()) {
    CAPTURE(name);
    const Model m = build_model(name);
    const auto pts = box_points(m.descriptor, 6, 43);
    for (std::uint64_t k = 0; k < 8; ++k) {
      const ScalarField f = field(random_field(m.descriptor, m.s().dim(), 4, 43, k));
      for (const auto& y : pts) {
        const BochnerResidual r = bochner_residuals(m.s(), f, y);
        CHECK(std::abs(r.horizontal) <= 1e-9);
        CHECK(std::abs(r.vertical) <= 1e-9);
      }
    }
  }
}

TEST_CASE("cd slack hand values") {
  const Model h = build_model("heisenberg");
  const ScalarField x2 = field(poly(3, {{{2, 0, 0}, 1.0}}));
  CHECK(cd_slack(h.s(), x2, ChartPoint{0, 0, 0}, 1.0, 0.0, 0.25, 0.5) == doctest::Approx(2.0));
  CHECK(cd_slack(h.s(), x2, ChartPoint{1, 0, 0}, 1.0, 0.0, 0.25, 0.5) == doctest::Approx(4.0));
}

TEST_CASE("slack is a + b nu + c / nu with b = Gamma2Z and c = kappa Gamma") {
  const Model m = build_model("su2");
  const CDParameters& p = m.descriptor.certified;
  const ScalarField f = field(random_field(m.descriptor, 3, 4, 44, 0));
  for (const auto& x : box_points(m.descriptor, 5, 44)) {
    const FormValue fv = forms(m.s(), f, x);
    const double n1 = 0.5, n2 = 1.0, n3 = 2.0;
    const double s1 = cd_slack(fv, 2, n1, p.rho1, *p.rho2, p.kappa);
    const double s2 = cd_slack(fv, 2, n2, p.rho1, *p.rho2, p.kappa);
    const double s3 = cd_slack(fv, 2, n3, p.rho1, *p.rho2, p.kappa);
    Eigen::Matrix3d a;
    a << 1, n1, 1 / n1, 1, n2, 1 / n2, 1, n3, 1 / n3;
    const Eigen::Vector3d coef = a.fullPivLu().solve(Eigen::Vector3d(s1, s2, s3));
    const double scale = 1.0 + std::abs(fv.gamma2) + std::abs(fv.gamma2Z);
    CHECK(std::abs(coef(1) - fv.gamma2Z) <= 1e-9 * scale);
    CHECK(std::abs(coef(2) - p.kappa * fv.gamma) <= 1e-9 * scale);
    CHECK(coef(1) >= -1e-12);
    CHECK(coef(2) >= -1e-12);
  }
}

TEST_CASE("certified constants keep the slack nonnegative on random samples") {
  for (const auto& name : builtin_model_names()) {
    CAPTURE(name);
    const Model m = build_model(name);
    RandomStream rng(45, 0);
    const auto pts = box_points(m.descriptor, 20, 45);
    for (std::uint64_t k = 0; k < 100; ++k) {
      const ScalarField f = field(random_field(m.descriptor, m.s().dim(), 4, 45, k));
      const double nu = 0.05 * std::pow(400.0, rng.uniform());
      CHECK(cd_slack(m.s(), f, pts[k % pts.size()], nu, m.descriptor.certified) >= -1e-9);
    }
  }
}

TEST_CASE("understated kappa is caught by the adversarial search") {
  const Model h = build_model("heisenberg");
  const auto pts = box_points(h.descriptor, 5, 46);
  RandomStream rng(46, 1);
  const CDParameters low = CDParameters::sub_riemannian(0.0, 0.25, 0.1, 2, 1);
  const SlackMinimum bad = adversarial_cd_search(h.s(), pts, 0.05, 20.0, 12, low, rng);
  CHECK(bad.min_eigenvalue < -1e-3);
  // the witness polynomial reproduces the negative slack
  const double s = cd_slack(h.s(), field(bad.witness), bad.point, bad.nu, low);
  CHECK(s < 0.0);

  RandomStream rng2(46, 2);
  const SlackMinimum ok = adversarial_cd_search(h.s(), pts, 0.05, 20.0, 12, h.descriptor.certified, rng2);
  CHECK(ok.min_eigenvalue >= -1e-9);
}
