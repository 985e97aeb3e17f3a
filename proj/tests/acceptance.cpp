// Acceptance gate: every criterion at full size and stated tolerance, one
// PASS/FAIL line each. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "srgeom/bochner.hpp"
#include "srgeom/calculus.hpp"
#include "srgeom/cdconstants.hpp"
#include "srgeom/curvature.hpp"
#include "srgeom/geodesics.hpp"
#include "srgeom/heat.hpp"
#include "srgeom/spectral.hpp"
#include "support.hpp"

using namespace srg;
using namespace srg::test;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double unit_log_uniform(RandomStream& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

// 1
Outcome tensoriality() {
  double gap = 0.0;
  for (const auto& name : builtin_model_names()) {
    const Model m = build_model(name);
    for (const auto& x : box_points(m.descriptor, 100, 1001))
      gap = std::max(gap, curvature_report(m.s(), x).tensoriality_gap());
  }
  return {gap <= 1e-9, fmt("max gap %.3e over 5 models x 100 points", gap)};
}

// 2 and 3 share the grid
struct BochnerGrid {
  double horizontal_exact = 0.0, horizontal_fd = 0.0, vertical = 0.0, commutator = 0.0;
};

BochnerGrid bochner_grid() {
  BochnerGrid g;
  for (const auto& name : builtin_model_names()) {
    const Model m = build_model(name);
    const auto pts = box_points(m.descriptor, 20, 2001);
    for (std::uint64_t k = 0; k < 50; ++k) {
      const ScalarField f = ScalarField::polynomial("f" + std::to_string(k),
                                                    random_field(m.descriptor, m.s().dim(), 4, 2001, k));
      const ScalarField ffd = f.with_backend(Backend::FiniteDifference);
      for (const auto& x : pts) {
        const BochnerResidual r = bochner_residuals(m.s(), f, x);
        g.horizontal_exact = std::max(g.horizontal_exact, std::abs(r.horizontal));
        g.vertical = std::max(g.vertical, std::abs(r.vertical));
        for (double c : commutator_LZ_residual(m.s(), f, x)) g.commutator = std::max(g.commutator, std::abs(c));
        g.horizontal_fd = std::max(g.horizontal_fd, std::abs(horizontal_bochner_residual(m.s(), ffd, x)));
      }
    }
  }
  return g;
}

BochnerGrid grid_cache;

Outcome horizontal_bochner() {
  grid_cache = bochner_grid();
  return {grid_cache.horizontal_exact <= 1e-9 && grid_cache.horizontal_fd <= 1e-5,
          fmt("exact %.3e, fd %.3e over 5 x 50 x 20", grid_cache.horizontal_exact, grid_cache.horizontal_fd)};
}

Outcome vertical_bochner() {
  return {grid_cache.vertical <= 1e-9 && grid_cache.commutator <= 1e-9,
          fmt("vertical %.3e, [L,Z] %.3e", grid_cache.vertical, grid_cache.commutator)};
}

// 4
Outcome certification() {
  bool ok = true;
  std::string detail;
  auto tight = [&](const std::string& name, double rho1, double rho2, double kappa) {
    const Model m = build_model(name);
    const auto pts = box_points(m.descriptor, 200, 4001);
    const CertificateReport r = certify_bounds(m.s(), pts, rho1, rho2, kappa, 0.0);
    const bool zero = std::abs(r.min_r_margin) <= 1e-12 && std::abs(r.min_t_margin) <= 1e-12;
    // a small increase in any constant breaks the certificate
    const bool sharp = !certify_bounds(m.s(), pts, rho1 + 1e-6, rho2, kappa, 0.0).pass &&
                       !certify_bounds(m.s(), pts, rho1, rho2 + 1e-6, kappa, 0.0).pass &&
                       !certify_bounds(m.s(), pts, rho1, rho2, kappa - 1e-6, 0.0).pass;
    ok = ok && r.pass && zero && sharp;
    detail += fmt("%s margins (%.1e, %.1e)%s; ", name.c_str(), r.min_r_margin, r.min_t_margin,
                  sharp ? "" : " not sharp");
  };
  tight("heisenberg", 0.0, 0.25, 0.5);
  tight("free_step2_d3", 0.0, 0.25, 1.0);
  const Model s = build_model("sphere2");
  const auto pts = box_points(s.descriptor, 200, 4002);
  const CertificateReport r = certify_bounds(s.s(), pts, CDParameters::riemannian(1.0, 2), 1e-12);
  ok = ok && r.pass && std::abs(r.min_r_margin) <= 1e-9;
  detail += fmt("sphere2 rho1=1 margin %.1e", r.min_r_margin);
  return {ok, detail};
}

// 5
Outcome cd_slack_sampling() {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& name : builtin_model_names()) {
    const Model m = build_model(name);
    RandomStream rng(5001, 1);
    const auto pts = box_points(m.descriptor, 1000, 5001);
    for (std::uint64_t k = 0; k < 1000; ++k) {
      const ScalarField f =
          ScalarField::polynomial("f", random_field(m.descriptor, m.s().dim(), 4, 5001, k));
      const double nu = unit_log_uniform(rng, 0.05, 20.0);
      worst = std::min(worst, cd_slack(m.s(), f, pts[k], nu, m.descriptor.certified));
    }
  }
  return {worst >= -1e-9, fmt("min slack %.3e over 5 x 1000 triples", worst)};
}

// 6
Outcome diameter_quadrature() {
  RandomStream rng(6001, 1);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int d = 2 + static_cast<int>(rng.uniform() * 3.0);
    const CDParameters p = CDParameters::sub_riemannian(rng.uniform(0.1, 5.0), rng.uniform(0.1, 3.0),
                                                        rng.uniform(0.0, 3.0), d, d * (d - 1) / 2);
    worst = std::max(worst, entropy_diameter_quadrature(p).relative_error.value());
  }
  const QuadratureResult su2 = entropy_diameter_quadrature(build_model("su2").descriptor.certified);
  const double su2_rel = su2.relative_error.value();
  const bool ok = worst <= 1e-6 && su2_rel <= 1e-6 && std::abs(su2.numeric.value() - 26.657) <= 1e-3;
  return {ok, fmt("worst relative %.2e on 20 sets; su2 %.6f (relative %.2e)", worst, su2.numeric.value(), su2_rel)};
}

// 7
Outcome sphere_lambda1() {
  const Model m = build_model("sphere2");
  const Lambda1Result r = lambda1_estimate(m);
  const double bound = derive_constants(m.descriptor.certified).lambda1_bound.value();
  return {std::abs(r.value - 2.0) <= 0.04 && r.value >= bound,
          fmt("lambda1 %.7f (fine %.7f), bound %.3f", r.value, r.upper, bound)};
}

// 8
Outcome heisenberg_censoring() {
  const Model m = build_model("heisenberg");
  DiffusionConfig cfg;
  cfg.n_paths = 100000;
  cfg.dt = 1e-3;
  cfg.t_max = 1.0;
  cfg.seed = 8001;
  cfg.censor_half_width = 50.0;
  const DiffusionEnsemble e = simulate_paths(m.s(), ChartPoint{0.0, 0.0, 0.0}, cfg);
  const std::int64_t censored = e.censored_count(e.snapshot_index(1.0));
  const MeanEstimate one = estimate_Ptf(e, [](std::span<const double>) { return 1.0; }, 1.0);
  return {censored == 0 && one.mean == 1.0, fmt("censored %lld, Pt1 = %.15g", static_cast<long long>(censored), one.mean)};
}

// 9
Outcome liyau() {
  const Model m = build_model("heisenberg");
  const SubRiemannianStructure& s = m.s();
  auto bump = [](std::span<const double> y) { return std::exp(-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])); };
  RandomStream rng(9001, 1);
  std::vector<ChartPoint> pts{ChartPoint{0.0, 0.0, 0.0}};
  for (int k = 1; k < 5; ++k) pts.push_back(ChartPoint{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)});
  const LiYauCoefficients coef = derive_constants(m.descriptor.certified).liyau;
  const double t = 1.0;
  LiYauConfig cfg;
  cfg.n_paths = 1000000;
  cfg.seed = 9001;
  const LiYauReport rep = liyau_check(s, bump, t, pts, coef, cfg);
  bool ok = rep.common_random_numbers && coef.lp_coefficient(t) == 4.0 && coef.constant_term(t) == 16.0 / t;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& p : rep.points) {
    ok = ok && p.slack >= -(3.0 * p.sigma + p.bias_budget);
    worst = std::min(worst, p.slack / (3.0 * p.sigma + p.bias_budget));
  }
  return {ok && rep.points.size() == 5, fmt("5 points, min slack/(3 sigma + bias) %.2f, censored %lld", worst,
                                           static_cast<long long>(rep.censored))};
}

// 10
Outcome harnack() {
  const Model m = build_model("heisenberg");
  DiffusionConfig cfg;
  cfg.n_paths = 1000000;
  cfg.dt = 1e-2;
  cfg.seed = 10001;
  const ChartPoint o{0.0, 0.0, 0.0};
  const HarnackReport h = harnack_check(m.s(), o, o, o, 0.5, 1.0, m.descriptor.certified, cfg,
                                        [](const ChartPoint&, const ChartPoint&) { return DistanceBracket{}; });
  return {h.pass && std::abs(h.factor - 16.0) <= 1e-12,
          fmt("p(0.5) %.5f, 16 p(1) %.5f, tolerance %.1e", h.p_s.value, h.factor * h.p_t.value, h.tolerance)};
}

// 11
Outcome volume_growth() {
  const Model m = build_model("heisenberg");
  const ChartPoint o{0.0, 0.0, 0.0};
  auto oracle = [](const ChartPoint& p, const ChartPoint& q) {
    const double d = heisenberg_distance(p.coords(), q.coords());
    return DistanceBracket{d, d};
  };
  std::vector<VolumeEstimate> vols;
  const std::vector<double> radii{1.0, 2.0, 3.0, 4.0, 6.0, 8.0};
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    const std::vector<double> hw{r, r, r * r / (2.0 * pi)};
    vols.push_back(ball_volume(m.s(), o, r, 20000, oracle, hw, 11001 + k));
  }
  const GrowthFit fit = volume_growth_fit(vols);
  const double D = derive_constants(m.descriptor.certified).D;
  return {std::abs(fit.exponent - 4.0) <= 0.3 && fit.exponent <= D,
          fmt("exponent %.4f +- %.4f, D = %.1f", fit.exponent, fit.std_error, D)};
}

// 12
Outcome geodesics() {
  bool ok = true;
  double drift = 0.0;
  RandomStream rng(12001, 1);
  for (const std::string name : {"heisenberg", "free_step2_d3"}) {
    const Model m = build_model(name);
    const int d = m.s().d();
    for (int k = 0; k < 5; ++k) {
      GeodesicState st;
      st.position = ChartPoint(m.descriptor.box_center);
      st.u.resize(d);
      double nrm = 0.0;
      for (double& u : st.u) {
        u = rng.normal();
        nrm += u * u;
      }
      for (double& u : st.u) u /= std::sqrt(nrm);
      st.a.resize(m.s().v());
      for (double& a : st.a) a = rng.uniform(-2.0, 2.0);
      const Trajectory tr = integrate_geodesic(m.s(), st, 10.0, 10000);
      for (const auto& smp : tr.samples) {
        double sp = 0.0;
        for (double u : smp.u) sp += u * u;
        drift = std::max(drift, std::abs(std::sqrt(sp) - 1.0));
      }
    }
  }
  ok = ok && drift <= 1e-10;

  const Model h = build_model("heisenberg");
  const double d01 = cc_distance(h.s(), ChartPoint{0.0, 0.0, 0.0}, ChartPoint{1.0, 0.0, 0.0}).value;
  ok = ok && std::abs(d01 - 1.0) <= 1e-6;

  ModelDescriptor half = h.descriptor;
  for (double& w : half.box_half_width) w *= 0.5;
  const auto pts = box_points(half, 150, 12002);
  double asym = 0.0, violation = -std::numeric_limits<double>::infinity();
  int unconverged = 0;
  auto dist = [&](const ChartPoint& p, const ChartPoint& q) {
    const DistanceResult r = cc_distance(h.s(), p, q);
    if (r.status != DistanceStatus::Converged) ++unconverged;
    return r.value;
  };
  for (int k = 0; k < 50; ++k) {
    const ChartPoint &x = pts[3 * k], &y = pts[3 * k + 1], &z = pts[3 * k + 2];
    const double xy = dist(x, y), yx = dist(y, x), yz = dist(y, z), xz = dist(x, z);
    asym = std::max(asym, std::abs(xy - yx));
    violation = std::max(violation, xz - xy - yz);
  }
  ok = ok && asym <= 1e-6 && violation <= 1e-6 && unconverged == 0;
  return {ok, fmt("speed drift %.2e, d(0,(1,0,0)) = %.10f, asymmetry %.1e, triangle excess %.2e, unconverged %d",
                  drift, d01, asym, violation, unconverged)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "curvature tensoriality", 30.0, tensoriality},
      {2, "horizontal Bochner identity", 120.0, horizontal_bochner},
      {3, "vertical Bochner identity and [L,Z]", 120.0, vertical_bochner},
      {4, "sharp certification", 60.0, certification},
      {5, "curvature-dimension slack", 120.0, cd_slack_sampling},
      {6, "diameter quadrature", 30.0, diameter_quadrature},
      {7, "sphere first eigenvalue", 120.0, sphere_lambda1},
      {8, "Heisenberg censoring and mass", 60.0, heisenberg_censoring},
      {9, "Li-Yau gradient estimate", 300.0, liyau},
      {10, "parabolic Harnack", 300.0, harnack},
      {11, "Heisenberg volume growth", 300.0, volume_growth},
      {12, "geodesics and distance", 300.0, geodesics},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d: %s  %s  (%.1f s / %.0f s budget%s)  %s\n", c.id, pass ? "PASS" : "FAIL", c.name, secs,
                c.budget_seconds, in_time ? "" : ", over budget", out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
