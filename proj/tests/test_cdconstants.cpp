#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "srgeom/cdconstants.hpp"
#include "support.hpp"

using namespace srg;
using namespace srg::test;

namespace {

double closed_diameter(double rho1, double rho2, double kappa, int d) {
  return 2.0 * std::sqrt(3.0) * pi *
         std::sqrt((kappa + rho2) / (rho1 * rho2) * (1.0 + 3.0 * kappa / (2.0 * rho2)) * d);
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(CDParameters::sub_riemannian(0.0, 0.0, 0.5, 2, 1), DomainError);
  CHECK_THROWS_AS(CDParameters::sub_riemannian(0.0, 0.25, -0.1, 2, 1), DomainError);
  CHECK_THROWS_AS(CDParameters::sub_riemannian(0.0, 0.25, 0.5, 0, 1), DomainError);
  CHECK_NOTHROW(CDParameters::riemannian(-1.0, 3));
  CHECK(CDParameters::riemannian(1.0, 2).dimension_factor() == 1.0);
}

TEST_CASE("certification of the built-in constants") {
  const Model h = build_model("heisenberg");
  const auto hp = box_points(h.descriptor, 50, 51);
  const CertificateReport ch = certify_bounds(h.s(), hp, 0.0, 0.25, 0.5, 1e-12);
  CHECK(ch.pass);
  CHECK(std::abs(ch.min_r_margin) <= 1e-12);
  CHECK(std::abs(ch.min_t_margin) <= 1e-12);
  CHECK_FALSE(certify_bounds(h.s(), hp, 0.1, 0.25, 0.5, 1e-12).pass);
  CHECK_FALSE(certify_bounds(h.s(), hp, 0.0, 0.3, 0.5, 1e-12).pass);
  CHECK_FALSE(certify_bounds(h.s(), hp, 0.0, 0.25, 0.4, 1e-12).pass);

  const Model f = build_model("free_step2_d3");
  const CertificateReport cf = certify_bounds(f.s(), box_points(f.descriptor, 50, 52), 0.0, 0.25, 1.0, 1e-12);
  CHECK(cf.pass);
  CHECK(std::abs(cf.min_t_margin) <= 1e-12);

  const Model su2 = build_model("su2");
  const CertificateReport cs = certify_bounds(su2.s(), box_points(su2.descriptor, 50, 53), 4.0, 1.0, 2.0, 1e-9);
  CHECK(cs.pass);
  CHECK(std::abs(cs.min_r_margin) <= 1e-9);
  CHECK(std::abs(cs.min_t_margin) <= 1e-9);
}

TEST_CASE("certified constants hold on 500 points per model") {
  for (const auto& name : builtin_model_names()) {
    CAPTURE(name);
    const Model m = build_model(name);
    const CertificateReport c = certify_bounds(m.s(), box_points(m.descriptor, 500, 54), m.descriptor.certified, 1e-9);
    CHECK(c.pass);
    CHECK(c.min_r_margin >= -1e-9);
    CHECK(c.min_t_margin >= -1e-9);
  }
}

TEST_CASE("pareto scans") {
  const Model h = build_model("heisenberg");
  const auto hp = box_points(h.descriptor, 10, 55);
  const std::vector<double> grid{0.1, 0.25, 0.3};
  const auto front = pareto_scan(h.s(), hp, grid);
  REQUIRE(front.size() == 3);
  CHECK(front[0].feasible);
  CHECK(front[0].rho1 == doctest::Approx(0.0));
  CHECK(front[1].rho1 == doctest::Approx(0.0));
  CHECK_FALSE(front[2].feasible);

  const Model s = build_model("sphere2");
  for (const auto& p : pareto_scan(s.s(), box_points(s.descriptor, 10, 56), grid))
    CHECK(p.rho1 == doctest::Approx(1.0));

  const Model su2 = build_model("su2");
  const std::vector<double> one{1.0};
  CHECK(pareto_scan(su2.s(), box_points(su2.descriptor, 10, 57), one)[0].rho1 == doctest::Approx(4.0));
}

TEST_CASE("derived constants of the reference parameter sets") {
  const DerivedConstants h = derive_constants(CDParameters::sub_riemannian(0.0, 0.25, 0.5, 2, 1));
  CHECK(h.D == doctest::Approx(8.0));
  CHECK(h.liyau.lp_coefficient(1.0) == doctest::Approx(4.0));
  CHECK(h.liyau.constant_term(2.0) == doctest::Approx(8.0));
  CHECK(std::isinf(h.diameter_bound));
  CHECK_FALSE(h.lambda1_bound.applicable());
  CHECK_THROWS_AS(h.lambda1_bound.value(), DomainError);
  CHECK_FALSE(h.kernel_global_bound(1.0).applicable());

  const DerivedConstants s = derive_constants(CDParameters::sub_riemannian(4.0, 1.0, 2.0, 2, 1));
  CHECK(s.D == doctest::Approx(8.0));
  CHECK(s.diameter_bound == doctest::Approx(2.0 * std::sqrt(3.0) * pi * std::sqrt(6.0)).epsilon(1e-14));
  CHECK(s.diameter_bound == doctest::Approx(26.657).epsilon(1e-4));
  CHECK(s.lambda1_bound.value() == doctest::Approx(1.6));
  CHECK(s.harnack_exponent == doctest::Approx(4.0));

  const DerivedConstants r = derive_constants(CDParameters::riemannian(1.0, 2));
  CHECK(r.lambda1_bound.value() == doctest::Approx(2.0));
}

TEST_CASE("derive_constants is pure") {
  RandomStream rng(58, 0);
  for (int k = 0; k < 20; ++k) {
    const auto p = CDParameters::sub_riemannian(rng.uniform(0.0, 5.0), rng.uniform(0.1, 3.0), rng.uniform(0.0, 3.0), 2, 1);
    const DerivedConstants a = derive_constants(p);
    const DerivedConstants b = derive_constants(p);
    CHECK(std::memcmp(&a.D, &b.D, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.diameter_bound, &b.diameter_bound, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.alpha, &b.alpha, sizeof(double)) == 0);
  }
}

TEST_CASE("diameter quadrature against the closed form") {
  CHECK(entropy_diameter_integral(1.0, 1.0) == doctest::Approx(2.0 * std::sqrt(2.0) * pi).epsilon(1e-9));
  // scaling x -> alpha x: the integral falls like alpha^(-1/2)
  const double a = entropy_diameter_integral(3.0, 100.0);
  const double b = entropy_diameter_integral(3.0, 400.0);
  CHECK(a / b == doctest::Approx(2.0).epsilon(1e-8));

  RandomStream rng(59, 0);
  for (int k = 0; k < 20; ++k) {
    const double D = rng.uniform(0.5, 20.0), alpha = rng.uniform(0.5, 20.0);
    const double exact = 2.0 * std::sqrt(2.0) * pi * std::sqrt(D / alpha);
    CHECK(std::abs(entropy_diameter_integral(D, alpha) / exact - 1.0) <= 1e-6);
  }
  for (int k = 0; k < 20; ++k) {
    const auto p = CDParameters::sub_riemannian(rng.uniform(0.2, 5.0), rng.uniform(0.1, 3.0), rng.uniform(0.0, 3.0), 2, 1);
    const QuadratureResult q = entropy_diameter_quadrature(p);
    CHECK(std::abs(q.numeric.value() / closed_diameter(p.rho1, *p.rho2, p.kappa, 2) - 1.0) <= 1e-6);
    CHECK(q.closed_form.value() == doctest::Approx(closed_diameter(p.rho1, *p.rho2, p.kappa, 2)).epsilon(1e-13));
  }
  const QuadratureResult su2 = entropy_diameter_quadrature(build_model("su2").descriptor.certified);
  CHECK(su2.relative_error.value() <= 1e-6);
  CHECK_FALSE(entropy_diameter_quadrature(CDParameters::sub_riemannian(0.0, 0.25, 0.5, 2, 1)).numeric.applicable());
}

TEST_CASE("harnack factor") {
  const DerivedConstants h = derive_constants(CDParameters::sub_riemannian(0.0, 0.25, 0.5, 2, 1));
  CHECK(harnack_factor(h, 0.5, 1.0, 0.0) == doctest::Approx(16.0));
  CHECK(harnack_factor(h, 0.5, 1.0, 1.0) == doctest::Approx(16.0 * std::exp(4.0 / 2.0)));
}
