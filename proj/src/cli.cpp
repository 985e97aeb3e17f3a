#include "srgeom/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "srgeom/bochner.hpp"
#include "srgeom/cdconstants.hpp"
#include "srgeom/curvature.hpp"
#include "srgeom/geodesics.hpp"
#include "srgeom/heat.hpp"
#include "srgeom/io.hpp"
#include "srgeom/models.hpp"
#include "srgeom/rng.hpp"
#include "srgeom/spectral.hpp"

#ifndef SRGEOM_VERSION
#define SRGEOM_VERSION "0.0.0"
#endif

namespace srg::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Verdict-level failure of a computation (as opposed to misuse).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model = "heisenberg";
  std::string structure;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  int points = 20;
  int fields = 10;
  std::int64_t paths = 10000;
  double dt = 1e-3;
  std::string out;
  std::string format = "json";
  int threads = 0;

  std::string backend = "exact";
  std::string from, to, via, u0, a;
  double T = 1.0;
  int steps = 400;
  double t = 1.0;
  double s = 0.5;
  std::string radii = "1,2,4,8";
  std::int64_t samples = 20000;
  double rho1 = kNaN, rho2 = kNaN, kappa = kNaN;
  std::string pareto;
  std::string ensemble;
  std::string scheme = "ito-corrected-euler";
  double bandwidth = 1.0;
  double width = 1.0;
  double step = 0.1;
  std::optional<double> censor;
  std::string cells;
  int starts = 32;
};

struct Report {
  json body = json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
  bool pass = true;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || !std::isfinite(v)) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(std::string("cannot parse ") + what + " '" + text + "'");
    }
  }
  return out;
}

ChartPoint parse_point(const std::string& text, const SubRiemannianStructure& s, const char* what) {
  auto v = parse_list(text, what);
  if (static_cast<int>(v.size()) != s.dim())
    throw UsageError(std::string(what) + " needs " + std::to_string(s.dim()) + " coordinates");
  ChartPoint p(std::move(v));
  if (!s.chart().contains(p.coords())) throw UsageError(std::string(what) + " lies outside the chart");
  return p;
}

Model load_model(const Options& o) {
  if (!o.structure.empty()) return read_structure_file(o.structure);
  try {
    return build_model(o.model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

Backend parse_backend(const std::string& b) {
  if (b == "exact") return Backend::Exact;
  if (b == "fd") return Backend::FiniteDifference;
  throw UsageError("backend must be 'exact' or 'fd'");
}

ChartPoint base_point(const Model& m) {
  const auto& g = m.s().group();
  if (g && m.s().chart().contains(g->identity) && m.descriptor.name != "su2") return ChartPoint(g->identity);
  return ChartPoint(m.descriptor.box_center);
}

CDParameters parameters(const Model& m, const Options& o) {
  const bool override_any = !std::isnan(o.rho1) || !std::isnan(o.rho2) || !std::isnan(o.kappa);
  if (!override_any) {
    if (!m.descriptor.has_certified) throw UsageError("structure has no certified constants; pass --rho1/--rho2/--kappa");
    return m.descriptor.certified;
  }
  const CDParameters& c = m.descriptor.certified;
  const double rho1 = std::isnan(o.rho1) ? c.rho1 : o.rho1;
  try {
    if (m.s().v() == 0) return CDParameters::riemannian(rho1, m.s().d());
    const double rho2 = std::isnan(o.rho2) ? c.rho2.value_or(kNaN) : o.rho2;
    const double kappa = std::isnan(o.kappa) ? c.kappa : o.kappa;
    return CDParameters::sub_riemannian(rho1, rho2, kappa, m.s().d(), m.s().v());
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

json constant_json(const Constant& c) {
  if (c.applicable()) return c.value();
  return json{{"value", nullptr}, {"reason", c.reason()}};
}

json number(double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan")); }

DistanceOracle distance_oracle(const Model& m) {
  const std::string& name = m.descriptor.name;
  if (name == "heisenberg") {
    return [](const ChartPoint& p, const ChartPoint& q) {
      const double dd = heisenberg_distance(p.coords(), q.coords());
      return DistanceBracket{dd, dd};
    };
  }
  if (name.rfind("euclidean", 0) == 0) {
    return [](const ChartPoint& p, const ChartPoint& q) {
      double acc = 0.0;
      for (std::size_t a = 0; a < p.size(); ++a) acc += (q[a] - p[a]) * (q[a] - p[a]);
      return DistanceBracket{std::sqrt(acc), std::sqrt(acc)};
    };
  }
  auto sp = m.structure;
  return [sp](const ChartPoint& p, const ChartPoint& q) {
    const DistanceResult r = cc_distance(*sp, p, q);
    const double upper = r.status == DistanceStatus::Converged ? r.value : std::numeric_limits<double>::infinity();
    return DistanceBracket{r.lower_bound, upper};
  };
}

// ---------------------------------------------------------------- commands

Report cmd_validate(const Options& o) {
  const Model m = load_model(o);
  RandomStream rng(o.seed, 0);
  const auto pts = sample_points(m.descriptor, o.points, rng);
  const ValidationReport v = validate_structure(m.s(), pts, o.tol, parse_backend(o.backend));
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["backend"] = o.backend;
  r.body["points"] = o.points;
  r.body["tol"] = o.tol;
  r.body["max_residual"] = v.max_residual;
  r.columns = {"point", "bracket", "vertical_bracket", "omega_skew", "gamma_skew", "delta_skew", "span_condition", "pass"};
  for (std::size_t k = 0; k < v.points.size(); ++k) {
    const auto& p = v.points[k];
    r.rows.push_back({static_cast<int>(k), p.bracket_residual, p.vertical_bracket_residual, p.omega_skew_residual,
                      p.gamma_skew_residual, p.delta_skew_residual, p.span_condition, p.pass});
  }
  r.pass = v.pass;
  return r;
}

Report cmd_verify_bochner(const Options& o, bool tol_given) {
  const Model m = load_model(o);
  const Backend backend = parse_backend(o.backend);
  const double tol = tol_given ? o.tol : (backend == Backend::Exact ? 1e-9 : 1e-5);
  RandomStream prng(o.seed, 0);
  const auto pts = sample_points(m.descriptor, o.points, prng);
  const int dim = m.s().dim();

  struct Row {
    double h = 0.0, v = 0.0, c = 0.0, scale = 0.0;
  };
  std::vector<Row> rows(static_cast<std::size_t>(o.fields) * pts.size());
  const int threads = std::min(resolve_threads(o.threads), std::max(1, o.fields));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int k = w; k < o.fields; k += threads) {
          RandomStream frng(o.seed, 1000 + static_cast<std::uint64_t>(k));
          const Polynomial p = Polynomial::random(dim, 4, frng, m.descriptor.box_center, m.descriptor.box_half_width);
          const ScalarField f = ScalarField::polynomial("field" + std::to_string(k), p, backend);
          for (std::size_t j = 0; j < pts.size(); ++j) {
            const BochnerResidual b = bochner_residuals(m.s(), f, pts[j]);
            double c = 0.0;
            for (double x : commutator_LZ_residual(m.s(), f, pts[j])) c = std::max(c, std::abs(x));
            rows[k * pts.size() + j] = {std::abs(b.horizontal), std::abs(b.vertical), c, 0.0};
          }
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  Report r;
  double mh = 0.0, mv = 0.0, mc = 0.0;
  r.columns = {"field", "point", "horizontal", "vertical", "commutator"};
  for (int k = 0; k < o.fields; ++k)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const Row& row = rows[k * pts.size() + j];
      mh = std::max(mh, row.h);
      mv = std::max(mv, row.v);
      mc = std::max(mc, row.c);
      r.rows.push_back({k, static_cast<int>(j), row.h, row.v, row.c});
    }
  r.body["model"] = m.descriptor.name;
  r.body["backend"] = o.backend;
  r.body["fields"] = o.fields;
  r.body["points"] = o.points;
  r.body["tol"] = tol;
  r.body["max_horizontal"] = mh;
  r.body["max_vertical"] = mv;
  r.body["max_commutator"] = mc;
  r.pass = mh <= tol && mv <= tol && mc <= tol;
  return r;
}

Report cmd_certify(const Options& o) {
  const Model m = load_model(o);
  const CDParameters p = parameters(m, o);
  RandomStream rng(o.seed, 0);
  const auto pts = sample_points(m.descriptor, o.points, rng);
  const CertificateReport c = certify_bounds(m.s(), pts, p, o.tol);
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["rho1"] = c.rho1;
  r.body["rho2"] = p.rho2 ? json(*p.rho2) : json(nullptr);
  r.body["kappa"] = c.kappa;
  r.body["tol"] = o.tol;
  r.body["min_r_margin"] = number(c.min_r_margin);
  r.body["min_t_margin"] = number(c.min_t_margin);
  r.columns = {"point", "r_margin", "t_margin", "pass"};
  for (std::size_t k = 0; k < c.points.size(); ++k)
    r.rows.push_back({static_cast<int>(k), number(c.points[k].r_margin), number(c.points[k].t_margin), c.points[k].pass});
  if (!o.pareto.empty()) {
    const auto grid = parse_list(o.pareto, "--pareto");
    json front = json::array();
    for (const ParetoPoint& pp : pareto_scan(m.s(), pts, grid))
      front.push_back({{"rho2", pp.rho2}, {"rho1", number(pp.rho1)}, {"feasible", pp.feasible}});
    r.body["pareto"] = front;
  }
  r.pass = c.pass;
  return r;
}

json constants_json(const CDParameters& p) {
  const DerivedConstants c = derive_constants(p);
  json j;
  j["rho1"] = p.rho1;
  j["rho2"] = p.rho2 ? json(*p.rho2) : json(nullptr);
  j["kappa"] = p.kappa;
  j["d"] = p.d;
  j["D"] = c.D;
  j["alpha"] = c.alpha;
  j["liyau"] = {{"gammaZ_rate", c.liyau.gammaZ_rate}, {"lp_const", c.liyau.lp_const},
                {"lp_rate", c.liyau.lp_rate},         {"c_lin", c.liyau.c_lin},
                {"c_const", c.liyau.c_const},         {"c_inv", c.liyau.c_inv}};
  j["harnack_exponent"] = c.harnack_exponent;
  j["harnack_gauss"] = c.harnack_gauss;
  j["hausdorff_bound"] = c.hausdorff_bound;
  j["diameter"] = number(c.diameter_bound);
  j["lambda1_bound"] = constant_json(c.lambda1_bound);
  j["isoperimetric_const"] = constant_json(c.isoperimetric_const);
  j["poincare_const"] = constant_json(c.poincare_const);
  const QuadratureResult q = entropy_diameter_quadrature(p);
  j["diameter_quadrature"] = {{"numeric", constant_json(q.numeric)}, {"relative_error", constant_json(q.relative_error)}};
  if (p.rho1 > 0.0)
    for (double t : {0.5, 1.0, 2.0}) j["kernel_global_bound"][std::to_string(t).substr(0, 3)] = c.kernel_global_bound(t).value();
  return j;
}

Report cmd_constants(const Options& o) {
  const Model m = load_model(o);
  Report r;
  r.body = constants_json(parameters(m, o));
  r.body["model"] = m.descriptor.name;
  return r;
}

Report cmd_geodesic(const Options& o) {
  const Model m = load_model(o);
  const SubRiemannianStructure& s = m.s();
  GeodesicState st;
  st.position = o.from.empty() ? base_point(m) : parse_point(o.from, s, "--from");
  st.u = o.u0.empty() ? std::vector<double>(s.d(), 0.0) : parse_list(o.u0, "--u0");
  if (o.u0.empty()) st.u[0] = 1.0;
  st.a = o.a.empty() ? std::vector<double>(s.v(), 0.0) : parse_list(o.a, "--a");
  if (static_cast<int>(st.u.size()) != s.d()) throw UsageError("--u0 needs d components");
  if (static_cast<int>(st.a.size()) != s.v()) throw UsageError("--a needs one entry per vertical field");
  if (o.steps < 1) throw UsageError("--steps must be positive");
  Trajectory tr;
  try {
    tr = integrate_geodesic(s, st, o.T, o.steps);
  } catch (const GeodesicBoundaryError& e) {
    throw ComputationError(std::string(e.what()) + " at t = " + std::to_string(e.time()));
  }
  auto speed = [](const std::vector<double>& u) {
    double acc = 0.0;
    for (double x : u) acc += x * x;
    return std::sqrt(acc);
  };
  const double s0 = speed(st.u);
  double drift = 0.0;
  for (const auto& smp : tr.samples) drift = std::max(drift, std::abs(speed(smp.u) - s0));
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["T"] = o.T;
  r.body["steps"] = o.steps;
  r.body["speed_drift"] = drift;
  r.body["length"] = o.T * s0;
  r.body["endpoint"] = tr.back().x;
  r.columns = {"t"};
  for (int a = 0; a < s.dim(); ++a) r.columns.push_back("x" + std::to_string(a));
  for (int i = 0; i < s.d(); ++i) r.columns.push_back("u" + std::to_string(i));
  for (int p = 0; p < s.v(); ++p) r.columns.push_back("a" + std::to_string(p));
  for (const auto& smp : tr.samples) {
    std::vector<json> row{smp.t};
    for (double x : smp.x) row.push_back(x);
    for (double x : smp.u) row.push_back(x);
    for (double x : tr.a) row.push_back(x);
    r.rows.push_back(std::move(row));
  }
  return r;
}

Report cmd_distance(const Options& o) {
  const Model m = load_model(o);
  const SubRiemannianStructure& s = m.s();
  if (o.to.empty()) throw UsageError("distance needs --to");
  const ChartPoint x = o.from.empty() ? base_point(m) : parse_point(o.from, s, "--from");
  const ChartPoint y = parse_point(o.to, s, "--to");
  ShootingConfig cfg;
  cfg.starts = o.starts;
  const DistanceResult d = cc_distance(s, x, y, cfg);
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["from"] = x.vector();
  r.body["to"] = y.vector();
  r.body["value"] = d.value;
  r.body["lower_bound"] = d.lower_bound;
  r.body["status"] = to_string(d.status);
  r.body["residual"] = number(d.residual);
  if (m.descriptor.name == "heisenberg") r.body["closed_form"] = heisenberg_distance(x.coords(), y.coords());
  r.columns = {"t"};
  for (int a = 0; a < s.dim(); ++a) r.columns.push_back("x" + std::to_string(a));
  for (const auto& smp : d.path.samples) {
    std::vector<json> row{smp.t};
    for (double v : smp.x) row.push_back(v);
    r.rows.push_back(std::move(row));
  }
  r.pass = d.status == DistanceStatus::Converged;
  return r;
}

DiffusionConfig diffusion_config(const Options& o) {
  DiffusionConfig c;
  c.n_paths = o.paths;
  c.dt = o.dt;
  c.t_max = o.t;
  c.seed = o.seed;
  c.bandwidth = o.bandwidth;
  c.scheme = parse_scheme(o.scheme);
  c.censor_half_width = o.censor;
  c.threads = o.threads;
  return c;
}

Report cmd_simulate(const Options& o) {
  const Model m = load_model(o);
  const ChartPoint x = o.from.empty() ? base_point(m) : parse_point(o.from, m.s(), "--from");
  const DiffusionConfig cfg = diffusion_config(o);
  const DiffusionEnsemble e = simulate_paths(m.s(), x, cfg);
  if (!o.ensemble.empty()) {
    std::ofstream f(o.ensemble, std::ios::binary);
    if (!f) throw UsageError("cannot open ensemble output '" + o.ensemble + "'");
    write_ensemble(f, e);
  }
  const MeanEstimate one = estimate_Ptf(e, [](std::span<const double>) { return 1.0; }, e.times.back());
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["start"] = x.vector();
  r.body["t"] = e.times.back();
  r.body["paths"] = e.n_paths;
  r.body["scheme"] = to_string(cfg.scheme);
  r.body["censored"] = e.censored_count(0);
  r.body["Pt1"] = one.mean;
  r.columns = {"coordinate", "mean", "stderr", "variance"};
  for (int a = 0; a < e.dim; ++a) {
    auto coord = [a, &m, &x](std::span<const double> y) { return m.s().chart().difference(a, x[a], y[a]); };
    const MeanEstimate mean = estimate_Ptf(e, coord, e.times.back());
    const MeanEstimate sq = estimate_Ptf(e, [&](std::span<const double> y) { return coord(y) * coord(y); }, e.times.back());
    r.rows.push_back({a, mean.mean, mean.std_error, sq.mean - mean.mean * mean.mean});
  }
  return r;
}

Report cmd_check_liyau(const Options& o) {
  const Model m = load_model(o);
  const SubRiemannianStructure& s = m.s();
  const CDParameters p = parameters(m, o);
  const ChartPoint base = o.from.empty() ? base_point(m) : parse_point(o.from, s, "--from");
  const std::vector<double> c(base.coords().begin(), base.coords().end());
  const double w = o.width;
  auto bump = [c, w, &s](std::span<const double> y) {
    double q = 0.0;
    for (std::size_t a = 0; a < c.size(); ++a) {
      const double dlt = s.chart().difference(static_cast<int>(a), c[a], y[a]);
      q += dlt * dlt;
    }
    return std::exp(-q / (w * w));
  };
  RandomStream rng(o.seed, 1);
  std::vector<ChartPoint> pts{base};
  for (int k = 1; k < o.points; ++k) {
    std::vector<double> y = c;
    for (double& v : y) v += rng.uniform(-0.3, 0.3);
    s.chart().wrap(y);
    pts.emplace_back(std::move(y));
  }
  LiYauConfig cfg;
  cfg.n_paths = o.paths;
  cfg.dt = o.dt;
  cfg.seed = o.seed;
  cfg.h = o.step;
  cfg.threads = o.threads;
  if (o.censor) cfg.censor_half_width = o.censor;
  const LiYauReport rep = liyau_check(s, bump, o.t, pts, p, cfg);
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["t"] = o.t;
  r.body["paths"] = o.paths;
  r.body["censored"] = rep.censored;
  r.body["lp_coefficient"] = rep.coefficients.lp_coefficient(o.t);
  r.body["constant_term"] = rep.coefficients.constant_term(o.t);
  r.columns = {"point", "u", "gamma_log", "gammaZ_log", "Lu_over_u", "slack", "sigma", "bias_budget", "pass"};
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    const auto& lp = rep.points[k];
    r.rows.push_back({static_cast<int>(k), lp.u, lp.gamma_log, lp.gammaZ_log, lp.lu_over_u, lp.slack, lp.sigma,
                      lp.bias_budget, lp.pass});
  }
  r.pass = rep.pass;
  return r;
}

Report cmd_check_harnack(const Options& o) {
  const Model m = load_model(o);
  const SubRiemannianStructure& s = m.s();
  const ChartPoint x = o.from.empty() ? base_point(m) : parse_point(o.from, s, "--from");
  const ChartPoint y = o.to.empty() ? x : parse_point(o.to, s, "--to");
  const ChartPoint z = o.via.empty() ? y : parse_point(o.via, s, "--via");
  DiffusionConfig cfg = diffusion_config(o);
  const HarnackReport h = harnack_check(s, x, y, z, o.s, o.t, parameters(m, o), cfg, distance_oracle(m));
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["s"] = o.s;
  r.body["t"] = o.t;
  r.body["p_s"] = {{"value", h.p_s.value}, {"stderr", h.p_s.std_error}, {"bias", h.p_s.bias}};
  r.body["p_t"] = {{"value", h.p_t.value}, {"stderr", h.p_t.std_error}, {"bias", h.p_t.bias}};
  r.body["distance"] = {{"lower", number(h.distance.lower)}, {"upper", number(h.distance.upper)}};
  r.body["factor"] = number(h.factor);
  r.body["margin"] = number(h.margin);
  r.body["tolerance"] = number(h.tolerance);
  r.body["trivial"] = h.trivial;
  r.pass = h.pass;
  return r;
}

std::vector<double> volume_box(const Model& m, double radius) {
  const SubRiemannianStructure& s = m.s();
  std::vector<double> hw(s.dim(), radius);
  if (s.graded_chart()) {
    // |z_mn| is the signed area swept by the projection onto the (m, n)
    // plane, at most r^2 / (2 pi) for a curve of length r
    for (int a = s.d(); a < s.dim(); ++a) hw[a] = radius * radius / (2.0 * std::numbers::pi);
    return hw;
  }
  const auto& axes = s.chart().axes();
  for (int a = 0; a < s.dim(); ++a)
    hw[a] = axes[a].period > 0.0 ? 0.5 * axes[a].period : std::min(radius, axes[a].upper - axes[a].lower);
  return hw;
}

Report cmd_volume(const Options& o) {
  const Model m = load_model(o);
  const ChartPoint x = o.from.empty() ? base_point(m) : parse_point(o.from, m.s(), "--from");
  const auto radii = parse_list(o.radii, "--radii");
  if (radii.size() < 2) throw UsageError("--radii needs at least two values");
  const DistanceOracle oracle = distance_oracle(m);
  std::vector<VolumeEstimate> vols;
  for (std::size_t k = 0; k < radii.size(); ++k)
    vols.push_back(ball_volume(m.s(), x, radii[k], o.samples, oracle, volume_box(m, radii[k]), o.seed + k));
  const GrowthFit fit = volume_growth_fit(vols);
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["exponent"] = fit.exponent;
  r.body["exponent_stderr"] = fit.std_error;
  r.body["min_local_slope"] = fit.min_local;
  r.body["max_local_slope"] = fit.max_local;
  bool monotone = true;
  for (std::size_t k = 1; k < vols.size(); ++k)
    if (radii[k] > radii[k - 1] &&
        vols[k].value + 3.0 * vols[k].std_error < vols[k - 1].value - 3.0 * vols[k - 1].std_error)
      monotone = false;
  r.body["monotone"] = monotone;
  bool within = true;
  if (m.descriptor.has_certified) {
    const double D = derive_constants(m.descriptor.certified).D;
    r.body["D"] = D;
    within = fit.exponent <= D + 3.0 * fit.std_error;
  }
  r.columns = {"radius", "volume", "stderr", "lower", "upper", "indeterminate"};
  for (const auto& v : vols) r.rows.push_back({v.radius, v.value, v.std_error, v.lower, v.upper, v.indeterminate});
  r.pass = monotone && within;
  return r;
}

Report cmd_lambda1(const Options& o) {
  const Model m = load_model(o);
  GridConfig cfg = default_grid(m.descriptor);
  if (!o.cells.empty()) {
    cfg.cells.clear();
    for (double c : parse_list(o.cells, "--cells")) cfg.cells.push_back(static_cast<int>(c));
  }
  cfg.seed = o.seed;
  const Lambda1Result res = lambda1_estimate(m, cfg);
  Report r;
  r.body["model"] = m.descriptor.name;
  r.body["lambda1"] = res.value;
  r.body["upper"] = res.upper;
  r.body["coarse"] = {{"cells", res.coarse.cells}, {"value", res.coarse.value}, {"residual", res.coarse.residual}};
  r.body["fine"] = {{"cells", res.fine.cells}, {"value", res.fine.value}, {"residual", res.fine.residual}};
  r.body["discretization_gap"] = res.coarse.value - res.fine.value;
  if (m.descriptor.has_certified) {
    const Constant bound = derive_constants(m.descriptor.certified).lambda1_bound;
    r.body["lambda1_bound"] = constant_json(bound);
    if (bound.applicable()) r.pass = res.value >= bound.value();
  }
  return r;
}

Report cmd_report_all(const Options& o) {
  Report r;
  r.columns = {"model", "validate", "certify", "bochner", "tensoriality_gap", "lambda1", "pass"};
  for (const std::string& name : builtin_model_names()) {
    Options mo = o;
    mo.model = name;
    mo.structure.clear();
    const Model m = build_model(name);
    const Report v = cmd_validate(mo);
    const Report c = cmd_certify(mo);
    Options bo = mo;
    bo.fields = std::min(o.fields, 5);
    bo.points = std::min(o.points, 5);
    const Report b = cmd_verify_bochner(bo, false);
    RandomStream rng(o.seed, 2);
    double gap = 0.0;
    for (const ChartPoint& x : sample_points(m.descriptor, o.points, rng))
      gap = std::max(gap, curvature_report(m.s(), x).tensoriality_gap());
    const bool gap_ok = gap <= 1e-9;
    json lam = nullptr;
    bool lam_ok = true;
    if (m.descriptor.compact) {
      const Report l = cmd_lambda1(mo);
      lam = l.body["lambda1"];
      lam_ok = l.pass;
    }
    const bool ok = v.pass && c.pass && b.pass && gap_ok && lam_ok;
    r.rows.push_back({name, v.pass, c.pass, b.pass, gap, lam, ok});
    r.body["models"][name] = {{"validate", v.body}, {"certify", c.body},
                              {"bochner", b.body},  {"tensoriality_gap", gap},
                              {"constants", constants_json(m.descriptor.certified)}, {"lambda1", lam}};
    r.pass = r.pass && ok;
  }
  return r;
}

// ---------------------------------------------------------------- emission

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string cell_text(const json& j) {
  if (j.is_number_float()) return format_number(j.get<double>());
  if (j.is_string()) return j.get<std::string>();
  if (j.is_null()) return "";
  return j.dump();
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    return;
  }
  out.emplace_back(prefix, cell_text(j));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string emit(const Report& r, const std::string& command, const std::string& config, const Options& o) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config)));
  std::ostringstream os;
  if (o.format == "json") {
    json doc;
    doc["tool"] = "srgeom";
    doc["version"] = SRGEOM_VERSION;
    doc["config_hash"] = hash;
    doc["seed"] = o.seed;
    doc["command"] = command;
    doc["pass"] = r.pass;
    doc["result"] = r.body;
    if (!r.columns.empty()) {
      doc["columns"] = r.columns;
      json rows = json::array();
      for (const auto& row : r.rows) rows.push_back(row);
      doc["rows"] = rows;
    }
    os << doc.dump(2) << "\n";
  } else if (o.format == "text") {
    os << "tool: srgeom\nversion: " << SRGEOM_VERSION << "\nconfig_hash: " << hash << "\nseed: " << o.seed
       << "\ncommand: " << command << "\npass: " << (r.pass ? "true" : "false") << "\n";
    std::vector<std::pair<std::string, std::string>> kv;
    flatten(r.body, "", kv);
    for (const auto& [k, v] : kv) os << k << ": " << v << "\n";
    if (!r.columns.empty()) {
      os << "\n";
      for (std::size_t c = 0; c < r.columns.size(); ++c) os << (c ? "  " : "") << r.columns[c];
      os << "\n";
      for (const auto& row : r.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "  " : "") << cell_text(row[c]);
        os << "\n";
      }
    }
  } else {
    os << "# srgeom " << SRGEOM_VERSION << " command=" << command << " config_hash=" << hash << " seed=" << o.seed
       << " pass=" << (r.pass ? "true" : "false") << "\n";
    if (!r.columns.empty()) {
      for (std::size_t c = 0; c < r.columns.size(); ++c) os << (c ? "," : "") << r.columns[c];
      os << "\n";
      for (const auto& row : r.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << cell_text(row[c]);
        os << "\n";
      }
    } else {
      std::vector<std::pair<std::string, std::string>> kv;
      flatten(r.body, "", kv);
      os << "key,value\n";
      for (const auto& [k, v] : kv) os << k << "," << v << "\n";
    }
  }
  return os.str();
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "Built-in model name");
  sub->add_option("--structure", o.structure, "srs-v1 structure file");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--tol", o.tol, "Tolerance");
  sub->add_option("--points", o.points, "Number of sample points")->check(CLI::PositiveNumber);
  sub->add_option("--fields", o.fields, "Number of random test fields")->check(CLI::PositiveNumber);
  sub->add_option("--paths", o.paths, "Number of diffusion paths")->check(CLI::PositiveNumber);
  sub->add_option("--dt", o.dt, "SDE time step")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "Report output path");
  sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv", "text"}));
  sub->add_option("--threads", o.threads, "Worker threads (default: SRC_THREADS, then all cores)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Sub-Riemannian curvature-dimension toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SRGEOM_VERSION);

  struct SubcommandInfo {
    const char* name;
    const char* help;
  };
  const SubcommandInfo subcommands[] = {
      {"validate", "Check bracket relations and structure-function skewness"},
      {"verify-bochner", "Horizontal/vertical Bochner identities and [L, Z] = 0 on random fields"},
      {"certify", "Certify (rho1, rho2, kappa) pointwise"},
      {"constants", "Derived constants"},
      {"geodesic", "Integrate one normal geodesic"},
      {"distance", "Carnot-Caratheodory distance by shooting"},
      {"simulate", "Simulate the diffusion"},
      {"check-liyau", "Monte Carlo check of the gradient estimate"},
      {"check-harnack", "Monte Carlo check of the kernel Harnack inequality"},
      {"volume", "Ball volumes and growth exponent"},
      {"lambda1", "First nonzero eigenvalue on a grid"},
      {"report-all", "Run the verification suite on every built-in model"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const SubcommandInfo& sp : subcommands) {
    CLI::App* sub = app.add_subcommand(sp.name, sp.help);
    add_common(sub, o);
    subs[sp.name] = sub;
  }
  subs["validate"]->add_option("--backend", o.backend, "Derivative backend")->check(CLI::IsMember({"exact", "fd"}));
  subs["verify-bochner"]->add_option("--backend", o.backend, "Derivative backend")->check(CLI::IsMember({"exact", "fd"}));
  for (const char* n : {"certify", "constants", "check-liyau", "check-harnack"}) {
    subs[n]->add_option("--rho1", o.rho1, "Override the certified rho1");
    subs[n]->add_option("--rho2", o.rho2, "Override the certified rho2");
    subs[n]->add_option("--kappa", o.kappa, "Override the certified kappa");
  }
  subs["certify"]->add_option("--pareto", o.pareto, "Comma-separated rho2 grid");
  subs["geodesic"]->add_option("--from", o.from, "Start point, comma-separated chart coordinates");
  subs["geodesic"]->add_option("--u0", o.u0, "Initial horizontal velocity in frame components");
  subs["geodesic"]->add_option("--a", o.a, "Vertical multipliers, one per ordered pair");
  subs["geodesic"]->add_option("--T", o.T, "Final time")->check(CLI::NonNegativeNumber);
  subs["geodesic"]->add_option("--steps", o.steps, "RK4 steps");
  subs["distance"]->add_option("--from", o.from, "Start point");
  subs["distance"]->add_option("--to", o.to, "Target point");
  subs["distance"]->add_option("--starts", o.starts, "Shooting starts")->check(CLI::PositiveNumber);
  for (const char* n : {"simulate", "check-liyau", "check-harnack"}) {
    subs[n]->add_option("--from", o.from, "Start point");
    subs[n]->add_option("--t", o.t, "Final time")->check(CLI::PositiveNumber);
    subs[n]->add_option("--censor", o.censor, "Censoring half-width around the start");
  }
  for (const char* n : {"simulate", "check-harnack"}) {
    subs[n]->add_option("--scheme", o.scheme, "SDE scheme")
        ->check(CLI::IsMember({"ito-corrected-euler", "heun-stratonovich", "group-exponential"}));
    subs[n]->add_option("--bandwidth", o.bandwidth, "Multiplier on the Scott bandwidth")->check(CLI::PositiveNumber);
  }
  subs["simulate"]->add_option("--ensemble", o.ensemble, "SRHE ensemble output path");
  subs["check-liyau"]->add_option("--width", o.width, "Width of the Gaussian bump")->check(CLI::PositiveNumber);
  subs["check-liyau"]->add_option("--step", o.step, "Stencil step along frame flows")->check(CLI::PositiveNumber);
  subs["check-harnack"]->add_option("--s", o.s, "Earlier time s < t")->check(CLI::PositiveNumber);
  subs["check-harnack"]->add_option("--to", o.to, "Point y evaluated at time s");
  subs["check-harnack"]->add_option("--via", o.via, "Point z evaluated at time t");
  subs["volume"]->add_option("--from", o.from, "Ball center");
  subs["volume"]->add_option("--radii", o.radii, "Comma-separated radii");
  subs["volume"]->add_option("--samples", o.samples, "Monte Carlo samples per radius")->check(CLI::PositiveNumber);
  subs["lambda1"]->add_option("--cells", o.cells, "Comma-separated coarse cell counts");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForVersion&) {
    out << SRGEOM_VERSION << "\n";
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "srgeom: " << e.what() << "\n";
    return kExitUsage;
  }
  if (o.threads <= 0) o.threads = resolve_threads(0);

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  std::string config = command;
  bool tol_given = false;
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_name();
    if (name == "--tol") tol_given = true;
    if (name == "--out" || name == "--threads" || name == "--help") continue;
    config += "\x1f" + name;
    for (const auto& res : opt->results()) config += "=" + res;
  }

  Report report;
  try {
    if (command == "validate") report = cmd_validate(o);
    else if (command == "verify-bochner") report = cmd_verify_bochner(o, tol_given);
    else if (command == "certify") report = cmd_certify(o);
    else if (command == "constants") report = cmd_constants(o);
    else if (command == "geodesic") report = cmd_geodesic(o);
    else if (command == "distance") report = cmd_distance(o);
    else if (command == "simulate") report = cmd_simulate(o);
    else if (command == "check-liyau") report = cmd_check_liyau(o);
    else if (command == "check-harnack") report = cmd_check_harnack(o);
    else if (command == "volume") report = cmd_volume(o);
    else if (command == "lambda1") report = cmd_lambda1(o);
    else report = cmd_report_all(o);
  } catch (const ComputationError& e) {
    err << "srgeom: " << e.what() << "\n";
    return kExitFail;
  } catch (const IterationLimitError& e) {
    err << "srgeom: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitFail;
  } catch (const InsufficientSamplingError& e) {
    err << "srgeom: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    err << "srgeom: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string text = emit(report, command, config, o);
  if (o.out.empty()) {
    out << text;
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) {
      err << "srgeom: cannot write '" << o.out << "'\n";
      return kExitUsage;
    }
    f << text;
  }
  return report.pass ? kExitPass : kExitFail;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, std::cout, std::cerr);
}

}  // namespace srg::cli
