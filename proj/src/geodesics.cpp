#include "srgeom/geodesics.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>

#include "srgeom/connection.hpp"

namespace srg {

namespace {

// Right-hand side of the scaled system on [0, 1]:
//   x' = T sum_i u_i X_i,  u' = -T Gamma(u, u) + sum_p b_p J_p u,  b = a T.
class GeodesicField {
 public:
  GeodesicField(const SubRiemannianStructure& s, std::vector<double> b, double T)
      : s_(s), b_(std::move(b)), T_(T), d_(s.d()), dim_(s.dim()) {}

  int size() const { return dim_ + d_; }

  // false when the frame cannot be evaluated at the state
  bool operator()(std::span<const double> y, std::span<double> dy) {
    auto x = y.subspan(0, dim_);
    if (!s_.chart().contains(x)) return false;
    s_.evaluate(x, fs_);
    auto u = y.subspan(dim_, d_);
    for (int a = 0; a < dim_; ++a) {
      double acc = 0.0;
      for (int i = 0; i < d_; ++i) acc += u[i] * fs_.X(i, a);
      dy[a] = T_ * acc;
    }
    for (int k = 0; k < d_; ++k) {
      // Gamma^k_ij u_i u_j with Gamma^k_ij = (omega^k_ij + omega^j_ki - omega^i_jk) / 2
      double quad = 0.0;
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
          quad += 0.5 * (fs_.w(i, j, k) + fs_.w(k, i, j) - fs_.w(j, k, i)) * u[i] * u[j];
      double rot = 0.0;
      for (int p = 0; p < static_cast<int>(b_.size()); ++p)
        for (int j = 0; j < d_; ++j) rot += b_[p] * fs_.g(k, j, p) * u[j];
      dy[dim_ + k] = -T_ * quad + rot;
    }
    for (double v : dy)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  const SubRiemannianStructure& s_;
  std::vector<double> b_;
  double T_;
  int d_, dim_;
  FrameSample<double> fs_;
};

GeodesicState state_of(const SubRiemannianStructure& s, std::span<const double> y, std::vector<double> a) {
  GeodesicState st;
  st.position = ChartPoint(std::vector<double>(y.begin(), y.begin() + s.dim()));
  st.u.assign(y.begin() + s.dim(), y.end());
  st.a = std::move(a);
  return st;
}

// Integrates on [0, 1]; throws GeodesicBoundaryError on leaving the chart.
void rk4(const SubRiemannianStructure& s, GeodesicField& f, std::vector<double>& y, int steps,
         const std::vector<double>& a, double T, const std::function<void(int, std::span<const double>)>& record) {
  const int n = f.size();
  const double h = 1.0 / steps;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto fail = [&](int step) {
    throw GeodesicBoundaryError("geodesic left the chart", state_of(s, y, a), step * h * T);
  };
  if (record) record(0, y);
  for (int step = 0; step < steps; ++step) {
    if (!f(y, k1)) fail(step);
    for (int c = 0; c < n; ++c) tmp[c] = y[c] + 0.5 * h * k1[c];
    if (!f(tmp, k2)) fail(step);
    for (int c = 0; c < n; ++c) tmp[c] = y[c] + 0.5 * h * k2[c];
    if (!f(tmp, k3)) fail(step);
    for (int c = 0; c < n; ++c) tmp[c] = y[c] + h * k3[c];
    if (!f(tmp, k4)) fail(step);
    for (int c = 0; c < n; ++c) y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    s.chart().wrap(std::span<double>(y.data(), s.dim()));
    if (record) record(step + 1, y);
  }
}

double radical_inverse(int index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * (index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

std::vector<double> unit_from_angles(std::span<const double> ang, int d) {
  std::vector<double> u(d, 0.0);
  double prod = 1.0;
  for (int k = 0; k < d - 1; ++k) {
    u[k] = prod * std::cos(ang[k]);
    prod *= std::sin(ang[k]);
  }
  u[d - 1] = prod;
  return u;
}

}  // namespace

void Trajectory::write_csv(std::ostream& os) const {
  if (samples.empty()) return;
  os << "t";
  for (std::size_t a = 0; a < samples[0].x.size(); ++a) os << ",x" << a;
  for (std::size_t i = 0; i < samples[0].u.size(); ++i) os << ",u" << i;
  for (std::size_t p = 0; p < this->a.size(); ++p) os << ",a" << p;
  os << "\n";
  os.precision(17);
  for (const auto& smp : samples) {
    os << smp.t;
    for (double v : smp.x) os << "," << v;
    for (double v : smp.u) os << "," << v;
    for (double v : this->a) os << "," << v;
    os << "\n";
  }
}

Trajectory integrate_geodesic(const SubRiemannianStructure& s, const GeodesicState& state0, double T, int steps,
                              int record_every) {
  if (steps < 1) throw DomainError("integrate_geodesic needs steps >= 1");
  if (!(T >= 0.0)) throw DomainError("integrate_geodesic needs T >= 0");
  s.check_point(state0.position);
  if (static_cast<int>(state0.u.size()) != s.d()) throw StructuralError("velocity has the wrong length");
  if (static_cast<int>(state0.a.size()) != s.v()) throw StructuralError("vertical multipliers have the wrong length");
  record_every = std::max(1, record_every);

  std::vector<double> b(state0.a.size());
  for (std::size_t p = 0; p < b.size(); ++p) b[p] = state0.a[p] * T;
  GeodesicField f(s, b, T);
  std::vector<double> y(state0.position.coords().begin(), state0.position.coords().end());
  y.insert(y.end(), state0.u.begin(), state0.u.end());

  Trajectory traj;
  traj.a = state0.a;
  const int dim = s.dim();
  rk4(s, f, y, steps, state0.a, T, [&](int step, std::span<const double> yy) {
    if (step % record_every != 0 && step != steps) return;
    GeodesicSample smp;
    smp.t = T * step / steps;
    smp.x.assign(yy.begin(), yy.begin() + dim);
    smp.u.assign(yy.begin() + dim, yy.end());
    traj.samples.push_back(std::move(smp));
  });
  return traj;
}

double horizontal_projection_bound(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y) {
  if (!s.graded_chart()) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < s.d(); ++i) {
    const double dlt = s.chart().difference(i, x[i], y[i]);
    acc += dlt * dlt;
  }
  return std::sqrt(acc);
}

DistanceResult cc_distance(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y,
                           const ShootingConfig& cfg) {
  s.check_point(x);
  s.check_point(y);
  const int d = s.d();
  const int v = s.v();
  const int dim = s.dim();
  DistanceResult best;
  best.lower_bound = horizontal_projection_bound(s, x, y);

  std::vector<double> delta(dim);
  double chart_gap = 0.0;
  for (int a = 0; a < dim; ++a) {
    delta[a] = s.chart().difference(a, x[a], y[a]);
    chart_gap += delta[a] * delta[a];
  }
  chart_gap = std::sqrt(chart_gap);
  if (chart_gap == 0.0) {
    best.value = 0.0;
    best.status = DistanceStatus::Converged;
    best.path = integrate_geodesic(s, {x, unit_from_angles(std::vector<double>(d, 0.0), d), std::vector<double>(v, 0.0)},
                                   0.0, 1);
    return best;
  }

  // unknowns: d-1 angles, v values of b = a T, and T
  const int n = d - 1 + v + 1;
  int steps = cfg.steps;
  auto endpoint_residual = [&](const std::vector<double>& prm) -> std::optional<Eigen::VectorXd> {
    const double T = prm[n - 1];
    if (!(T > 0.0)) return std::nullopt;
    std::vector<double> b(prm.begin() + (d - 1), prm.begin() + (d - 1 + v));
    GeodesicField f(s, b, T);
    std::vector<double> state(x.coords().begin(), x.coords().end());
    auto u = unit_from_angles(std::span<const double>(prm.data(), d - 1), d);
    state.insert(state.end(), u.begin(), u.end());
    try {
      rk4(s, f, state, steps, {}, T, nullptr);
    } catch (const GeodesicBoundaryError&) {
      return std::nullopt;
    }
    Eigen::VectorXd r(dim);
    for (int a = 0; a < dim; ++a) r(a) = s.chart().difference(a, y[a], state[a]);
    return r;
  };

  // Levenberg-Marquardt on the endpoint residual; returns its final norm
  auto solve = [&](std::vector<double>& prm) -> double {
    auto r = endpoint_residual(prm);
    if (!r) return std::numeric_limits<double>::infinity();
    double cost = r->squaredNorm();
    double lambda = 1e-3;
    for (int it = 0; it < cfg.max_iterations && std::sqrt(cost) > cfg.tolerance; ++it) {
      Eigen::MatrixXd J(dim, n);
      bool ok = true;
      for (int k = 0; k < n; ++k) {
        // central differences: the Jacobian is rank-deficient at targets
        // reached by a family of minimizers, where one-sided errors stall
        std::vector<double> qp = prm, qm = prm;
        const double hstep = 1e-6 * std::max(1.0, std::abs(prm[k]));
        qp[k] += hstep;
        qm[k] -= hstep;
        auto rp = endpoint_residual(qp);
        auto rm = endpoint_residual(qm);
        if (rp && rm) {
          J.col(k) = (*rp - *rm) / (2.0 * hstep);
        } else if (rp || rm) {
          J.col(k) = rp ? (*rp - *r) / hstep : (*r - *rm) / hstep;
        } else {
          ok = false;
          break;
        }
      }
      if (!ok) break;
      const Eigen::MatrixXd JtJ = J.transpose() * J;
      const Eigen::VectorXd g = J.transpose() * *r;
      bool improved = false;
      for (int tries = 0; tries < 12 && !improved; ++tries) {
        Eigen::MatrixXd A = JtJ;
        for (int k = 0; k < n; ++k) A(k, k) += lambda * std::max(JtJ(k, k), 1e-12);
        const Eigen::VectorXd step = A.ldlt().solve(-g);
        std::vector<double> q = prm;
        for (int k = 0; k < n; ++k) q[k] += step(k);
        auto rq = endpoint_residual(q);
        if (rq && rq->squaredNorm() < cost) {
          prm = std::move(q);
          r = rq;
          cost = rq->squaredNorm();
          lambda = std::max(lambda / 10.0, 1e-12);
          improved = true;
        } else {
          lambda *= 10.0;
        }
      }
      if (!improved) break;
    }
    return std::sqrt(cost);
  };

  const double t_scale = chart_gap + 2.0 * std::sqrt(chart_gap);
  double best_T = std::numeric_limits<double>::infinity();
  double best_res = std::numeric_limits<double>::infinity();
  std::vector<double> best_prm;
  bool any_converged = false;
  // shortest candidate that stalled just above tolerance
  std::vector<double> stalled;
  int stalled_start = -1;

  for (int start = 0; start < cfg.starts; ++start) {
    std::vector<double> prm(n);
    int dimk = 0;
    auto halton = [&]() { return radical_inverse(start + 1, kPrimes[dimk++ % 12]); };
    for (int k = 0; k < d - 1; ++k) prm[k] = (k == d - 2 ? 2.0 * std::numbers::pi : std::numbers::pi) * halton();
    for (int p = 0; p < v; ++p) prm[d - 1 + p] = cfg.b_range * (2.0 * halton() - 1.0);
    prm[n - 1] = t_scale * (0.5 + 2.0 * halton());

    const double res = solve(prm);
    if (!std::isfinite(res)) continue;
    const double T = prm[n - 1];
    const bool conv = res <= cfg.tolerance;
    if (conv && (!any_converged || T < best_T)) {
      any_converged = true;
      best_T = T;
      best_res = res;
      best_prm = prm;
      best.start_index = start;
    } else if (!any_converged && res < best_res) {
      best_res = res;
      best_T = T;
      best_prm = prm;
      best.start_index = start;
    }
    if (!conv && res < 1e-6 && (stalled.empty() || T < stalled[n - 1])) {
      stalled = prm;
      stalled_start = start;
    }
  }

  // Fixed-step RK4 does not close the circular arcs of the horizontal
  // projection exactly, so targets reached by a whole family of minimizers
  // can stall slightly above tolerance; re-solve on finer grids.
  if (!stalled.empty() && (!any_converged || stalled[n - 1] < best_T)) {
    for (int pass = 0; pass < 2; ++pass) {
      steps *= 4;
      const double res = solve(stalled);
      if (res <= cfg.tolerance || (!any_converged && res < best_res)) {
        best_res = res;
        best_T = stalled[n - 1];
        best_prm = stalled;
        best.start_index = stalled_start;
        any_converged = res <= cfg.tolerance;
      }
      if (res <= cfg.tolerance) break;
    }
  }

  if (best_prm.empty()) {
    best.status = DistanceStatus::LowerBoundOnly;
    best.value = best.lower_bound;
    best.residual = std::numeric_limits<double>::infinity();
    return best;
  }
  best.value = best_T;
  best.residual = best_res;
  best.status = any_converged ? DistanceStatus::Converged : DistanceStatus::MaxIter;
  GeodesicState st;
  st.position = x;
  st.u = unit_from_angles(std::span<const double>(best_prm.data(), d - 1), d);
  st.a.resize(v);
  for (int p = 0; p < v; ++p) st.a[p] = best_prm[d - 1 + p] / best_T;
  best.path = integrate_geodesic(s, st, best_T, steps);
  return best;
}

DualityCheck dtheta_duality_residual(const SubRiemannianStructure& s, const ChartPoint& x, std::span<const double> v1,
                                     std::span<const double> v2) {
  const int d = s.d();
  const int v = s.v();
  if (static_cast<int>(v1.size()) != d || static_cast<int>(v2.size()) != d)
    throw StructuralError("horizontal vectors need d components");
  const StructureJets raw = bracket_structure_jets(s, x);
  const FrameSample<double> fs = s.sample(x);
  DualityCheck out;
  out.cartan.assign(v, 0.0);
  out.j_side.assign(v, 0.0);
  out.residual.assign(v, 0.0);
  for (int p = 0; p < v; ++p) {
    // theta_p(V) = 0 for horizontal V, so d theta_p(V1, V2) = -theta_p([V1, V2]),
    // and theta_p([X_i, X_j]) is the Z_p coefficient of the raw bracket
    double c = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) c -= v1[i] * v2[j] * 2.0 * raw.values.g(i, j, p);
    double jv = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) jv += v1[i] * fs.g(i, j, p) * v2[j];
    out.cartan[p] = c;
    out.j_side[p] = -2.0 * jv;
    out.residual[p] = std::abs(c - out.j_side[p]);
  }
  return out;
}

double heisenberg_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != 3 || q.size() != 3) throw StructuralError("heisenberg_distance needs points of H^1");
  // left translate p to the origin: p^{-1} q
  const double x = q[0] - p[0];
  const double y = q[1] - p[1];
  const double z = q[2] - p[2] - 0.5 * (p[0] * q[1] - p[1] * q[0]);
  const double r = std::hypot(x, y);
  const double az = std::abs(z);
  if (az == 0.0) return r;
  if (r == 0.0) return std::sqrt(4.0 * std::numbers::pi * az);
  // solve mu(theta) = (2 theta - sin 2 theta) / (8 sin^2 theta) = |z| / r^2 on (0, pi)
  const double target = az / (r * r);
  auto mu = [](double th) {
    if (th < 1e-4) return th / 6.0 + th * th * th / 45.0;
    const double s = std::sin(th);
    return (2.0 * th - std::sin(2.0 * th)) / (8.0 * s * s);
  };
  double lo = 0.0, hi = std::numbers::pi;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mu(mid) < target) lo = mid;
    else hi = mid;
  }
  const double th = 0.5 * (lo + hi);
  return th < 1e-8 ? r * (1.0 + th * th / 6.0) : r * th / std::sin(th);
}

const char* to_string(DistanceStatus s) {
  switch (s) {
    case DistanceStatus::Converged: return "converged";
    case DistanceStatus::MaxIter: return "max-iter";
    case DistanceStatus::LowerBoundOnly: return "lower-bound-only";
  }
  return "unknown";
}

}  // namespace srg
