#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "srgeom/geodesics.hpp"
#include "support.hpp"

using namespace srg;
using namespace srg::test;

namespace {

double norm(const std::vector<double>& u) {
  double acc = 0.0;
  for (double x : u) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("straight lines with zero multiplier") {
  const Model h = build_model("heisenberg");
  const Trajectory tr = integrate_geodesic(h.s(), {ChartPoint{0, 0, 0}, {1.0, 0.0}, {0.0}}, 2.0, 100);
  for (const auto& smp : tr.samples) {
    CHECK(smp.x[0] == doctest::Approx(smp.t));
    CHECK(smp.x[1] == 0.0);
    CHECK(smp.x[2] == 0.0);
  }
}

TEST_CASE("Heisenberg geodesics project to circles") {
  // J = [[0, 1/2], [-1/2, 0]]: u turns at rate a/2, so the projection is a
  // circle of radius 2/a and the chord after time T is (4/a) sin(a T / 4).
  const Model h = build_model("heisenberg");
  for (double a : {0.5, 2.0, -3.0}) {
    CAPTURE(a);
    const double T = 3.0;
    const Trajectory tr = integrate_geodesic(h.s(), {ChartPoint{0, 0, 0}, {1.0, 0.0}, {a}}, T, 2000);
    const auto& end = tr.back();
    CHECK(norm(end.u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(end.u[0] == doctest::Approx(std::cos(a * T / 2.0)).epsilon(1e-9));
    const double chord = std::hypot(end.x[0], end.x[1]);
    CHECK(chord == doctest::Approx(std::abs(4.0 / a * std::sin(a * T / 4.0))).epsilon(1e-9));
    // enclosed area: z = R^2 (phi - sin phi) / 2 with phi = a T / 2, up to orientation
    const double R = 2.0 / std::abs(a), phi = std::abs(a) * T / 2.0;
    CHECK(std::abs(end.x[2]) == doctest::Approx(R * R * (phi - std::sin(phi)) / 2.0).epsilon(1e-9));
  }
}

TEST_CASE("sphere geodesics close after 2 pi") {
  const Model s = build_model("sphere2");
  const GeodesicState st{ChartPoint{pi / 2.0, 0.3}, {0.5, std::sqrt(0.75)}, {}};
  const Trajectory tr = integrate_geodesic(s.s(), st, 2.0 * pi, 4000);
  CHECK(tr.back().x[0] == doctest::Approx(pi / 2.0).epsilon(1e-6));
  CHECK(s.s().chart().difference(1, 0.3, tr.back().x[1]) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(tr.back().u[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("geodesics that leave the chart raise a boundary error") {
  const Model s = build_model("sphere2");
  CHECK_THROWS_AS(integrate_geodesic(s.s(), {ChartPoint{0.3, 0.0}, {-1.0, 0.0}, {}}, 1.0, 100), GeodesicBoundaryError);
}

TEST_CASE("speed is conserved over long runs") {
  for (const auto& name : builtin_model_names()) {
    if (name == "sphere2") continue;
    CAPTURE(name);
    const Model m = build_model(name);
    RandomStream rng(61, 0);
    const auto pts = box_points(m.descriptor, 3, 61);
    for (const auto& x : pts) {
      std::vector<double> u(m.s().d()), a(m.s().v());
      for (double& c : u) c = rng.uniform(-1.0, 1.0);
      for (double& c : a) c = rng.uniform(-1.0, 1.0);
      const double s0 = norm(u);
      Trajectory tr;
      try {
        tr = integrate_geodesic(m.s(), {x, u, a}, 10.0, 10000);
      } catch (const GeodesicBoundaryError& e) {
        // su2 frames are singular on the Hopf circles; truncated runs still count
        tr = integrate_geodesic(m.s(), {x, u, a}, 0.9 * e.time(), 10000);
      }
      double drift = 0.0;
      for (const auto& smp : tr.samples) drift = std::max(drift, std::abs(norm(smp.u) - s0));
      CHECK(drift <= 1e-10);
    }
  }
}

TEST_CASE("Heisenberg distances against the closed form") {
  const Model h = build_model("heisenberg");
  const DistanceResult d = cc_distance(h.s(), ChartPoint{0, 0, 0}, ChartPoint{1, 0, 0});
  CHECK(d.status == DistanceStatus::Converged);
  CHECK(d.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(d.lower_bound == doctest::Approx(1.0));

  for (double c : {0.1, 0.5, 2.0}) {
    const DistanceResult v = cc_distance(h.s(), ChartPoint{0, 0, 0}, ChartPoint{0, 0, c});
    CHECK(v.status == DistanceStatus::Converged);
    CHECK(v.value == doctest::Approx(std::sqrt(4.0 * pi * c)).epsilon(1e-6));
  }
  CHECK(heisenberg_distance(std::vector<double>{0, 0, 0}, std::vector<double>{0, 0, 1.0}) ==
        doctest::Approx(std::sqrt(4.0 * pi)));

  RandomStream rng(62, 0);
  for (int k = 0; k < 10; ++k) {
    ChartPoint x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    ChartPoint y{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const DistanceResult r = cc_distance(h.s(), x, y);
    REQUIRE(r.status == DistanceStatus::Converged);
    CHECK(r.value == doctest::Approx(heisenberg_distance(x.coords(), y.coords())).epsilon(1e-6));
    CHECK(r.value >= r.lower_bound - 1e-12);
  }
}

TEST_CASE("distance from a point to itself") {
  for (const auto& name : builtin_model_names()) {
    const Model m = build_model(name);
    const ChartPoint x = box_points(m.descriptor, 1, 63)[0];
    CHECK(cc_distance(m.s(), x, x).value == 0.0);
  }
}

TEST_CASE("symmetry and triangle inequality on random triples") {
  for (const std::string name : {"heisenberg", "sphere2", "free_step2_d3"}) {
    CAPTURE(name);
    const Model m = build_model(name);
    ModelDescriptor small = m.descriptor;
    for (double& w : small.box_half_width) w *= 0.5;
    const auto pts = box_points(small, 15, 64);
    ShootingConfig cfg;
    const double tol = 1e-6;
    for (int k = 0; k < 5; ++k) {
      const ChartPoint &x = pts[3 * k], &y = pts[3 * k + 1], &z = pts[3 * k + 2];
      const DistanceResult xy = cc_distance(m.s(), x, y, cfg), yx = cc_distance(m.s(), y, x, cfg);
      const DistanceResult yz = cc_distance(m.s(), y, z, cfg), xz = cc_distance(m.s(), x, z, cfg);
      REQUIRE(xy.status == DistanceStatus::Converged);
      REQUIRE(yx.status == DistanceStatus::Converged);
      CHECK(std::abs(xy.value - yx.value) <= 2.0 * tol);
      CHECK(xy.value + yz.value - xz.value >= -2.0 * tol);
      CHECK(xy.value >= horizontal_projection_bound(m.s(), x, y) - 1e-12);
    }
  }
}

TEST_CASE("d theta against the J operators") {
  const Model h = build_model("heisenberg");
  const std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
  const DualityCheck c = dtheta_duality_residual(h.s(), ChartPoint{0.2, 0.4, 0.1}, e1, e2);
  CHECK(c.cartan[0] == doctest::Approx(-1.0));
  CHECK(c.j_side[0] == doctest::Approx(-1.0));
  CHECK(c.residual[0] == doctest::Approx(0.0));
  const DualityCheck same = dtheta_duality_residual(h.s(), ChartPoint{0.2, 0.4, 0.1}, e1, e1);
  CHECK(same.cartan[0] == 0.0);
  CHECK(same.j_side[0] == 0.0);

  const Model su2 = build_model("su2");
  RandomStream rng(65, 0);
  for (const auto& x : box_points(su2.descriptor, 20, 65)) {
    const std::vector<double> v1{rng.uniform(-1, 1), rng.uniform(-1, 1)}, v2{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (double r : dtheta_duality_residual(su2.s(), x, v1, v2).residual) CHECK(std::abs(r) <= 1e-9);
  }
}
