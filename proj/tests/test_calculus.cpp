#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "srgeom/calculus.hpp"
#include "support.hpp"

using namespace srg;
using namespace srg::test;

namespace {

const Model& heis() {
  static const Model m = build_model("heisenberg");
  return m;
}

ScalarField field(const Polynomial& p, Backend b = Backend::Exact) { return ScalarField::polynomial("p", p, b); }

}  // namespace

TEST_CASE("frame words on simple fields") {
  const auto& s = heis().s();
  CHECK(apply_frame_word(s, {X(0)}, field(poly(3, {{{2, 0, 0}, 1.0}})), ChartPoint{1.0, 0.0, 0.0}) ==
        doctest::Approx(2.0));

  const Model sphere = build_model("sphere2");
  const ScalarField phi = field(poly(2, {{{0, 1}, 1.0}}));
  CHECK(apply_frame_word(sphere.s(), {X(1)}, phi, ChartPoint{pi / 2.0, 1.0}) == doctest::Approx(1.0));
  // X2 = (1/sin theta) d_phi away from the equator
  CHECK(apply_frame_word(sphere.s(), {X(1)}, phi, ChartPoint{pi / 6.0, 1.0}) == doctest::Approx(2.0));
}

TEST_CASE("X1 X2 - X2 X1 equals Z on cubics") {
  const auto& s = heis().s();
  const auto pts = box_points(heis().descriptor, 10, 11);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const ScalarField f = field(random_field(heis().descriptor, 3, 3, 11, k));
    for (const auto& x : pts) {
      const double lhs = apply_frame_word(s, {X(0), X(1)}, f, x) - apply_frame_word(s, {X(1), X(0)}, f, x);
      CHECK(lhs == doctest::Approx(apply_frame_word(s, {Zv(0)}, f, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("words longer than four are refused") {
  const ScalarField f = field(poly(3, {{{1, 0, 0}, 1.0}}));
  CHECK_THROWS_AS(apply_frame_word(heis().s(), {X(0), X(0), X(0), X(0), X(0)}, f, ChartPoint{0, 0, 0}),
                  UnsupportedOrderError);
  CHECK_THROWS_AS(apply_frame_word(heis().s(), {X(2)}, f, ChartPoint{0, 0, 0}), InvalidIndexError);
}

TEST_CASE("sub-Laplacian examples") {
  const auto& s = heis().s();
  const ScalarField r2 = field(poly(3, {{{2, 0, 0}, 1.0}, {{0, 2, 0}, 1.0}}));
  const ScalarField xy = field(poly(3, {{{1, 1, 0}, 1.0}}));
  for (const auto& x : box_points(heis().descriptor, 10, 12)) {
    CHECK(sublaplacian(s, r2, x) == doctest::Approx(4.0));
    CHECK(std::abs(sublaplacian(s, xy, x)) < 1e-12);
  }
  const Model sphere = build_model("sphere2");
  const ScalarField cz = ScalarField::closed_form("cos", [](auto x) {
    using std::cos;
    return cos(x[0]);
  });
  for (const auto& x : box_points(sphere.descriptor, 10, 13))
    CHECK(sublaplacian(sphere.s(), cz, x) == doctest::Approx(-2.0 * std::cos(x[0])).epsilon(1e-12));
}

TEST_CASE("forms on the Heisenberg examples") {
  const auto& s = heis().s();
  const ChartPoint x{0.3, -0.7, 0.2};
  const FormValue a = forms(s, field(poly(3, {{{1, 1, 0}, 1.0}})), x);
  CHECK(a.gamma == doctest::Approx(0.3 * 0.3 + 0.7 * 0.7));
  CHECK(a.gamma2 == doctest::Approx(2.0));
  CHECK(a.gammaZ == doctest::Approx(0.0));

  const FormValue b = forms(s, field(poly(3, {{{0, 0, 1}, 1.0}})), x);
  CHECK(b.gamma == doctest::Approx((0.09 + 0.49) / 4.0));
  CHECK(b.gammaZ == doctest::Approx(2.0));
  CHECK(b.gamma2 == doctest::Approx(0.5));

  const FormValue c = forms(s, field(poly(3, {{{2, 0, 1}, 1.0}})), ChartPoint{1.0, 0.0, 0.0});
  CHECK(c.gamma2Z == doctest::Approx(8.0));
}

TEST_CASE("symmetrized Hessian") {
  const auto& s = heis().s();
  const ChartPoint x{0.4, 0.1, -0.3};
  const auto h = sym_hessian(s, field(poly(3, {{{1, 1, 0}, 1.0}})), x);
  CHECK(h(0, 1) == doctest::Approx(1.0));
  CHECK(h(1, 0) == doctest::Approx(1.0));
  CHECK(std::abs(h(0, 0)) < 1e-14);
  CHECK(std::abs(h(1, 1)) < 1e-14);
  CHECK(sym_hessian(s, field(poly(3, {{{0, 0, 1}, 1.0}})), x).cwiseAbs().maxCoeff() < 1e-14);
  for (const auto& name : builtin_model_names()) {
    const Model m = build_model(name);
    const auto pts = box_points(m.descriptor, 3, 14);
    CHECK(sym_hessian(m.s(), field(Polynomial::constant(m.s().dim(), 3.0)), pts[0]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("[L, Z] vanishes on valid structures and not on a broken delta") {
  const auto pts = box_points(heis().descriptor, 10, 15);
  const ScalarField f = field(poly(3, {{{3, 0, 1}, 1.0}}));
  for (const auto& x : pts) {
    for (double r : commutator_LZ_residual(heis().s(), f, x)) CHECK(r == 0.0);
    for (double r : commutator_LZ_direct(heis().s(), f, x)) CHECK(std::abs(r) < 1e-12);
  }

  const Model su2 = build_model("su2");
  for (std::uint64_t k = 0; k < 5; ++k) {
    const ScalarField g = field(random_field(su2.descriptor, 3, 3, 15, k));
    for (const auto& x : box_points(su2.descriptor, 10, 16 + k))
      for (double r : commutator_LZ_residual(su2.s(), g, x)) CHECK(std::abs(r) <= 1e-9);
  }

  const auto broken = perturbed_heisenberg({.delta_102 = 0.1});
  const ScalarField g = field(poly(3, {{{1, 0, 0}, 1.0}, {{0, 1, 1}, 0.5}}));
  double worst = 0.0;
  for (const auto& x : pts)
    for (double r : commutator_LZ_residual(broken, g, x)) worst = std::max(worst, std::abs(r));
  CHECK(worst > 1e-3);
}

TEST_CASE("Gamma is symmetric, nonnegative and matches the Leibniz route") {
  for (const auto& name : builtin_model_names()) {
    CAPTURE(name);
    const Model m = build_model(name);
    const int dim = m.s().dim();
    const auto pts = box_points(m.descriptor, 8, 17);
    for (std::uint64_t k = 0; k < 6; ++k) {
      const Polynomial p = random_field(m.descriptor, dim, 3, 17, 2 * k);
      const Polynomial q = random_field(m.descriptor, dim, 3, 17, 2 * k + 1);
      const ScalarField f = field(p), g = field(q);
      // f^2 as a field of its own, built from a product of jets
      const ScalarField f2 = ScalarField::closed_form("f2", [p](auto x) { return p(x) * p(x); });
      for (const auto& x : pts) {
        const double fg = carre_du_champ(m.s(), f, g, x);
        CHECK(fg == doctest::Approx(carre_du_champ(m.s(), g, f, x)).epsilon(1e-13));
        const double ff = carre_du_champ(m.s(), f, f, x);
        CHECK(ff >= 0.0);
        const double fx = f(x.coords());
        const double leibniz = 0.5 * (sublaplacian(m.s(), f2, x) - 2.0 * fx * sublaplacian(m.s(), f, x));
        CHECK(ff == doctest::Approx(leibniz).epsilon(1e-9).scale(1.0));
      }
    }
  }
}

TEST_CASE("chain rule for exp through the finite-difference backend") {
  for (const auto& name : builtin_model_names()) {
    CAPTURE(name);
    const Model m = build_model(name);
    const Polynomial p = random_field(m.descriptor, m.s().dim(), 2, 18, 0) * 0.3;
    const ScalarField f = field(p);
    const ScalarField ef = ScalarField::closed_form(
        "exp", [p](auto x) {
          using std::exp;
          return exp(p(x));
        },
        Backend::FiniteDifference);
    for (const auto& x : box_points(m.descriptor, 5, 18)) {
      const double e = std::exp(f(x.coords()));
      const double rhs = e * carre_du_champ(m.s(), f, f, x) + e * sublaplacian(m.s(), f, x);
      CHECK(sublaplacian(m.s(), ef, x) == doctest::Approx(rhs).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("finite differences agree with jets on quartics") {
  for (const auto& name : builtin_model_names()) {
    CAPTURE(name);
    const Model m = build_model(name);
    const auto pts = box_points(m.descriptor, 4, 19);
    for (std::uint64_t k = 0; k < 4; ++k) {
      const Polynomial p = random_field(m.descriptor, m.s().dim(), 4, 19, k);
      const ScalarField exact = field(p);
      const ScalarField fd = field(p, Backend::FiniteDifference);
      for (const auto& x : pts) {
        const FormValue a = forms(m.s(), exact, x);
        const FormValue b = forms(m.s(), fd, x);
        const double scale = 1.0 + std::abs(a.gamma2) + std::abs(a.gamma2Z);
        CHECK(std::abs(a.gamma - b.gamma) <= 1e-6 * scale);
        CHECK(std::abs(a.lf - b.lf) <= 1e-6 * scale);
        CHECK(std::abs(a.gamma2 - b.gamma2) <= 1e-6 * scale);
        CHECK(std::abs(a.gamma2Z - b.gamma2Z) <= 1e-6 * scale);
      }
    }
  }
}
