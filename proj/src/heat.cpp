#include "srgeom/heat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include "srgeom/rng.hpp"

namespace srg {

namespace {

constexpr int kBatches = 32;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Sum in a fixed binary-tree order so the result does not depend on how the
// terms were produced.
double tree_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return tree_sum(v.subspan(0, half)) + tree_sum(v.subspan(half));
}

// Mean and standard error from batch sums over contiguous path ranges.
struct BatchStats {
  double mean = 0.0;
  double std_error = 0.0;
};

BatchStats batch_stats(std::span<const double> per_path) {
  const std::size_t n = per_path.size();
  BatchStats out;
  if (n == 0) return out;
  out.mean = tree_sum(per_path) / static_cast<double>(n);
  const std::size_t nb = std::min<std::size_t>(kBatches, n);
  if (nb < 2) return out;
  std::vector<double> means(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * n / nb;
    const std::size_t hi = (b + 1) * n / nb;
    means[b] = tree_sum(per_path.subspan(lo, hi - lo)) / static_cast<double>(hi - lo);
  }
  double var = 0.0;
  for (double m : means) var += (m - out.mean) * (m - out.mean);
  var /= static_cast<double>(nb - 1);
  out.std_error = std::sqrt(var / static_cast<double>(nb));
  return out;
}

// Runs body(lo, hi) over [0, n) split into contiguous chunks.
template <class Body>
void parallel_ranges(std::int64_t n, int threads, Body body) {
  threads = static_cast<int>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(1, n)));
  if (threads == 1) {
    body(std::int64_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k) {
    const std::int64_t lo = k * n / threads;
    const std::int64_t hi = (k + 1) * n / threads;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

// c_a = sum_k omega^k_{ak}; X0 = -sum_a c_a X_a.
void drift_field(const FrameSample<double>& fs, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < fs.d; ++a) {
    double c = 0.0;
    for (int k = 0; k < fs.d; ++k) c += fs.w(a, k, k);
    if (c == 0.0) continue;
    for (int b = 0; b < fs.dim; ++b) out[b] -= c * fs.X(a, b);
  }
}

bool drift_vanishes(const SubRiemannianStructure& s, std::span<const double> x) {
  FrameSample<double> fs;
  s.evaluate(x, fs);
  for (int a = 0; a < fs.d; ++a) {
    double c = 0.0;
    for (int k = 0; k < fs.d; ++k) c += fs.w(a, k, k);
    if (std::abs(c) > 1e-14) return false;
  }
  return true;
}

struct CensorBox {
  std::vector<double> lower, upper;

  CensorBox(const SubRiemannianStructure& s, std::span<const double> x0, std::optional<double> half_width) {
    const auto& axes = s.chart().axes();
    for (std::size_t a = 0; a < axes.size(); ++a) {
      double lo = axes[a].lower, hi = axes[a].upper;
      if (axes[a].period > 0.0) {
        lo = -kInf;
        hi = kInf;
      } else if (half_width) {
        lo = std::max(lo, x0[a] - *half_width);
        hi = std::min(hi, x0[a] + *half_width);
      }
      lower.push_back(lo);
      upper.push_back(hi);
    }
  }

  bool inside(std::span<const double> x) const {
    for (std::size_t a = 0; a < lower.size(); ++a)
      if (!std::isfinite(x[a]) || x[a] < lower[a] || x[a] > upper[a]) return false;
    return true;
  }
};

// One path advanced by one step of the chosen scheme. Returns false when the
// new state is not admissible (caller censors and keeps the old state).
class Stepper {
 public:
  Stepper(const SubRiemannianStructure& s, SdeScheme scheme, double dt)
      : s_(s), scheme_(scheme), dt_(dt), sq_(std::sqrt(2.0 * dt)), dim_(s.dim()), d_(s.d()),
        skip_correction_(s.graded_chart()), drift_(dim_), drift2_(dim_), pred_(dim_), w_(d_) {}

  bool step(std::span<double> y, RandomStream& rng) {
    for (int i = 0; i < d_; ++i) w_[i] = rng.normal();
    switch (scheme_) {
      case SdeScheme::GroupExponential: {
        for (int i = 0; i < d_; ++i) w_[i] *= sq_;
        s_.group()->horizontal_step(y, w_);
        return true;
      }
      case SdeScheme::ItoEuler: {
        s_.evaluate(std::span<const double>(y.data(), y.size()), fs_);
        drift_field(fs_, drift_);
        if (!skip_correction_) {
          const auto corr = ito_correction(s_, y);
          for (int a = 0; a < dim_; ++a) drift_[a] += corr[a];
        }
        for (int a = 0; a < dim_; ++a) {
          double incr = drift_[a] * dt_;
          for (int i = 0; i < d_; ++i) incr += sq_ * fs_.X(i, a) * w_[i];
          y[a] += incr;
        }
        return true;
      }
      case SdeScheme::HeunStratonovich: {
        s_.evaluate(std::span<const double>(y.data(), y.size()), fs_);
        drift_field(fs_, drift_);
        for (int a = 0; a < dim_; ++a) {
          double incr = drift_[a] * dt_;
          for (int i = 0; i < d_; ++i) incr += sq_ * fs_.X(i, a) * w_[i];
          pred_[a] = y[a] + incr;
        }
        if (!s_.chart().contains(pred_)) return false;
        s_.evaluate(std::span<const double>(pred_), fs2_);
        drift_field(fs2_, drift2_);
        for (int a = 0; a < dim_; ++a) {
          double incr = 0.5 * (drift_[a] + drift2_[a]) * dt_;
          for (int i = 0; i < d_; ++i) incr += 0.5 * sq_ * (fs_.X(i, a) + fs2_.X(i, a)) * w_[i];
          y[a] += incr;
        }
        return true;
      }
    }
    return false;
  }

 private:
  const SubRiemannianStructure& s_;
  SdeScheme scheme_;
  double dt_, sq_;
  int dim_, d_;
  bool skip_correction_;
  FrameSample<double> fs_, fs2_;
  std::vector<double> drift_, drift2_, pred_, w_;
};

// Gaussian product-kernel weights of one path at bandwidths h and 2h.
struct KernelPair {
  double h1 = 0.0;
  double h2 = 0.0;
};

KernelPair kernel_weights(const Chart& chart, std::span<const double> y, std::span<const double> pos,
                          std::span<const double> bw) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  double q1 = 0.0, q2 = 0.0, norm = 1.0;
  for (std::size_t a = 0; a < y.size(); ++a) {
    const double u = chart.difference(static_cast<int>(a), y[a], pos[a]) / bw[a];
    q1 += u * u;
    q2 += 0.25 * u * u;
    norm *= inv_sqrt_2pi / bw[a];
  }
  const double scale2 = std::pow(0.5, static_cast<double>(y.size()));
  return {norm * std::exp(-0.5 * q1), norm * scale2 * std::exp(-0.5 * q2)};
}

std::vector<double> scott_bandwidth(const Chart& chart, const DiffusionEnsemble& e, int snap, double mult) {
  std::vector<double> mean(e.dim, 0.0), sq(e.dim, 0.0);
  std::int64_t n = 0;
  const auto ref = e.start.coords();
  for (std::int64_t k = 0; k < e.n_paths; ++k) {
    if (e.censored(snap, k)) continue;
    const auto pos = e.position(snap, k);
    for (int a = 0; a < e.dim; ++a) {
      const double u = chart.difference(a, ref[a], pos[a]);
      mean[a] += u;
      sq[a] += u * u;
    }
    ++n;
  }
  if (n < 2) throw InsufficientSamplingError("kernel estimate needs at least two uncensored paths");
  const double factor = mult * std::pow(static_cast<double>(n), -1.0 / (e.dim + 4));
  std::vector<double> bw(e.dim);
  for (int a = 0; a < e.dim; ++a) {
    const double m = mean[a] / n;
    const double var = std::max(sq[a] / n - m * m, 0.0);
    bw[a] = factor * std::max(std::sqrt(var), 1e-12);
  }
  return bw;
}

double density_at(const SubRiemannianStructure& s, std::span<const double> y) {
  FrameSample<double> fs;
  s.evaluate(y, fs);
  if (!(fs.density > 0.0)) throw DomainError("measure density vanishes at the kernel evaluation point");
  return fs.density;
}

// Flow of the frame field `label` for time `tau`, RK4 with fixed substeps.
std::vector<double> frame_flow(const SubRiemannianStructure& s, std::span<const double> x, FrameLabel label,
                               double tau) {
  constexpr int kSub = 16;
  const int dim = s.dim();
  std::vector<double> y(x.begin(), x.end()), tmp(dim), k1(dim), k2(dim), k3(dim), k4(dim);
  FrameSample<double> fs;
  auto field = [&](std::span<const double> p, std::vector<double>& out) {
    s.evaluate(p, fs);
    for (int a = 0; a < dim; ++a) out[a] = fs.field(label, a);
  };
  const double h = tau / kSub;
  for (int k = 0; k < kSub; ++k) {
    field(y, k1);
    for (int a = 0; a < dim; ++a) tmp[a] = y[a] + 0.5 * h * k1[a];
    field(tmp, k2);
    for (int a = 0; a < dim; ++a) tmp[a] = y[a] + 0.5 * h * k2[a];
    field(tmp, k3);
    for (int a = 0; a < dim; ++a) tmp[a] = y[a] + h * k3[a];
    field(tmp, k4);
    for (int a = 0; a < dim; ++a) y[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
  }
  s.chart().wrap(y);
  return y;
}

template <class T>
void put_le(std::ostream& os, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(v);
  char buf[sizeof(U)];
  for (std::size_t b = 0; b < sizeof(U); ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  os.write(buf, sizeof(U));
}

template <class T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) throw FormatError("truncated ensemble file");
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(buf[b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

}  // namespace

const char* to_string(SdeScheme s) {
  switch (s) {
    case SdeScheme::ItoEuler: return "ito-corrected-euler";
    case SdeScheme::HeunStratonovich: return "heun-stratonovich";
    case SdeScheme::GroupExponential: return "group-exponential";
  }
  return "unknown";
}

SdeScheme parse_scheme(const std::string& name) {
  if (name == "ito-corrected-euler") return SdeScheme::ItoEuler;
  if (name == "heun-stratonovich") return SdeScheme::HeunStratonovich;
  if (name == "group-exponential") return SdeScheme::GroupExponential;
  throw DomainError("unknown SDE scheme '" + name + "'");
}

void DiffusionConfig::validate() const {
  if (n_paths < 1) throw DomainError("n_paths must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  if (!(t_max >= dt)) throw DomainError("dt must not exceed t_max");
  if (!(bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  if (censor_half_width && !(*censor_half_width > 0.0)) throw DomainError("censoring half-width must be positive");
  for (double t : snapshot_times)
    if (!(t > 0.0) || t > t_max * (1.0 + 1e-12)) throw DomainError("snapshot times must lie in (0, t_max]");
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SRC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::int64_t DiffusionEnsemble::censored_count(int snapshot) const {
  std::int64_t c = 0;
  for (std::int64_t k = 0; k < n_paths; ++k) c += censored(snapshot, k) ? 1 : 0;
  return c;
}

int DiffusionEnsemble::snapshot_index(double t) const {
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return static_cast<int>(k);
  throw DomainError("no snapshot stored at t = " + std::to_string(t));
}

std::vector<double> ito_correction(const SubRiemannianStructure& s, std::span<const double> x) {
  LocalFrame lf(s, x, 1);
  const int dim = s.dim();
  std::vector<double> out(dim, 0.0);
  const auto& layout = lf.layout();
  for (int i = 0; i < s.d(); ++i)
    for (int a = 0; a < dim; ++a) {
      const Jet& coef = lf.jets().X(i, a);
      for (int b = 0; b < dim; ++b) out[a] += lf.values().X(i, b) * coef.coefficient(layout.variable_index(b));
    }
  return out;
}

DiffusionEnsemble simulate_paths(const SubRiemannianStructure& s, const ChartPoint& x0, const DiffusionConfig& cfg) {
  cfg.validate();
  s.check_point(x0);
  if (cfg.scheme == SdeScheme::GroupExponential) {
    if (!s.group() || !s.group()->horizontal_step)
      throw DomainError("group-exponential scheme needs a group law with a horizontal step");
    if (!drift_vanishes(s, x0.coords())) throw DomainError("group-exponential scheme needs X0 = 0");
  }

  const std::int64_t n_steps = std::max<std::int64_t>(1, std::llround(std::ceil(cfg.t_max / cfg.dt - 1e-9)));
  const double dt = cfg.t_max / static_cast<double>(n_steps);
  std::vector<double> requested = cfg.snapshot_times.empty() ? std::vector<double>{cfg.t_max} : cfg.snapshot_times;
  std::sort(requested.begin(), requested.end());
  std::vector<std::int64_t> snap_steps;
  for (double t : requested)
    snap_steps.push_back(std::clamp<std::int64_t>(std::llround(t / dt), 1, n_steps));

  DiffusionEnsemble e;
  e.dim = s.dim();
  e.n_paths = cfg.n_paths;
  e.seed = cfg.seed;
  e.start = x0;
  for (auto k : snap_steps) e.times.push_back(static_cast<double>(k) * dt);
  e.positions.assign(snap_steps.size(), std::vector<double>(static_cast<std::size_t>(cfg.n_paths) * e.dim));
  e.censor_time.assign(cfg.n_paths, kInf);

  const CensorBox box(s, x0.coords(), cfg.censor_half_width);
  const int dim = e.dim;
  parallel_ranges(cfg.n_paths, resolve_threads(cfg.threads), [&](std::int64_t lo, std::int64_t hi) {
    Stepper stepper(s, cfg.scheme, dt);
    std::vector<double> y(dim), prev(dim);
    for (std::int64_t path = lo; path < hi; ++path) {
      RandomStream rng(cfg.seed, static_cast<std::uint64_t>(path));
      std::copy(x0.coords().begin(), x0.coords().end(), y.begin());
      std::size_t next_snap = 0;
      bool alive = true;
      for (std::int64_t step = 1; step <= n_steps && next_snap < snap_steps.size(); ++step) {
        if (alive) {
          prev = y;
          bool ok = stepper.step(y, rng);
          s.chart().wrap(y);
          if (!ok || !box.inside(y)) {
            y = prev;
            alive = false;
            e.censor_time[path] = static_cast<double>(step) * dt;
          }
        }
        while (next_snap < snap_steps.size() && snap_steps[next_snap] == step) {
          std::copy(y.begin(), y.end(), e.positions[next_snap].begin() + path * dim);
          ++next_snap;
        }
        if (!alive) {
          for (; next_snap < snap_steps.size(); ++next_snap)
            std::copy(y.begin(), y.end(), e.positions[next_snap].begin() + path * dim);
        }
      }
    }
  });
  return e;
}

MeanEstimate estimate_Ptf(const DiffusionEnsemble& e, const PointFunction& f, double t) {
  const int snap = e.snapshot_index(t);
  std::vector<double> vals(e.n_paths);
  MeanEstimate out;
  for (std::int64_t k = 0; k < e.n_paths; ++k) {
    if (e.censored(snap, k)) {
      vals[k] = 0.0;
      ++out.censored;
    } else {
      vals[k] = f(e.position(snap, k));
    }
  }
  const BatchStats st = batch_stats(vals);
  out.mean = st.mean;
  out.std_error = st.std_error;
  return out;
}

MeanEstimate estimate_Ptf(const SubRiemannianStructure& s, const ChartPoint& x, const PointFunction& f, double t,
                          const DiffusionConfig& cfg) {
  if (!(t > 0.0) || t > cfg.t_max * (1.0 + 1e-12)) throw DomainError("t must lie in (0, t_max]");
  DiffusionConfig c = cfg;
  c.snapshot_times = {t};
  return estimate_Ptf(simulate_paths(s, x, c), f, t);
}

KernelEstimate estimate_kernel(const SubRiemannianStructure& s, const DiffusionEnsemble& e, const ChartPoint& y,
                               double t, double bandwidth) {
  if (!(bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  s.check_point(y);
  const int snap = e.snapshot_index(t);
  KernelEstimate out;
  out.bandwidth = scott_bandwidth(s.chart(), e, snap, bandwidth);
  const double rho = density_at(s, y.coords());
  std::vector<double> w1(e.n_paths), comb(e.n_paths);
  double sw = 0.0, sw2 = 0.0;
  for (std::int64_t k = 0; k < e.n_paths; ++k) {
    if (e.censored(snap, k)) {
      w1[k] = comb[k] = 0.0;
      continue;
    }
    const KernelPair kp = kernel_weights(s.chart(), y.coords(), e.position(snap, k), out.bandwidth);
    w1[k] = kp.h1 / rho;
    comb[k] = (4.0 * kp.h1 - kp.h2) / (3.0 * rho);
    sw += kp.h1;
    sw2 += kp.h1 * kp.h1;
  }
  const BatchStats raw = batch_stats(w1);
  const BatchStats corrected = batch_stats(comb);
  out.raw = raw.mean;
  out.value = std::max(0.0, corrected.mean);
  out.std_error = corrected.std_error;
  out.bias = std::abs(corrected.mean - raw.mean);
  out.n_eff = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
  return out;
}

KernelEstimate estimate_kernel(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y, double t,
                               const DiffusionConfig& cfg) {
  if (!(t > 0.0) || t > cfg.t_max * (1.0 + 1e-12)) throw DomainError("t must lie in (0, t_max]");
  DiffusionConfig c = cfg;
  c.snapshot_times = {t};
  return estimate_kernel(s, simulate_paths(s, x, c), y, t, cfg.bandwidth);
}

LiYauReport liyau_check(const SubRiemannianStructure& s, const PointFunction& f, double t,
                        std::span<const ChartPoint> pts, const LiYauCoefficients& coef, const LiYauConfig& cfg) {
  if (!(t > 0.0)) throw DomainError("liyau_check needs t > 0");
  if (!(cfg.h > 0.0)) throw DomainError("stencil step must be positive");
  if (pts.empty()) throw DomainError("liyau_check needs at least one point");
  const int d = s.d();
  const int v = s.v();
  const int dim = s.dim();

  // node layout per point: centre, then for each label L and
  // step in {+h, -h, +2h, -2h} the flow of L from the centre
  std::vector<FrameLabel> labels;
  for (int i = 0; i < d; ++i) labels.push_back(X(i));
  for (int p = 0; p < v; ++p) labels.push_back(Zv(p));
  const double steps[4] = {cfg.h, -cfg.h, 2.0 * cfg.h, -2.0 * cfg.h};
  const int per_point = 1 + 4 * static_cast<int>(labels.size());
  std::vector<std::vector<double>> nodes;
  for (const ChartPoint& x : pts) {
    s.check_point(x);
    nodes.emplace_back(x.coords().begin(), x.coords().end());
    for (FrameLabel l : labels)
      for (double st : steps) nodes.push_back(frame_flow(s, x.coords(), l, st));
  }
  const std::size_t n_nodes = nodes.size();

  DiffusionConfig dc;
  dc.n_paths = cfg.n_paths;
  dc.dt = std::min(cfg.dt, t);
  dc.t_max = t;
  dc.seed = cfg.seed;
  dc.censor_half_width = cfg.censor_half_width;
  dc.threads = cfg.threads;

  LiYauReport rep;
  rep.t = t;
  rep.coefficients = coef;
  rep.common_random_numbers = true;

  // batch sums of f over paths, per node
  const std::int64_t n = cfg.n_paths;
  const int nb = static_cast<int>(std::min<std::int64_t>(kBatches, n));
  std::vector<std::vector<double>> batch(n_nodes, std::vector<double>(nb, 0.0));
  auto batch_of = [&](std::int64_t k) { return static_cast<int>(k * nb / n); };
  auto batch_size = [&](int b) { return static_cast<double>((b + 1) * n / nb - b * n / nb); };

  const auto& group = s.group();
  const bool fast = group && group->horizontal_step && group->multiply && drift_vanishes(s, group->identity);
  if (fast) {
    // one ensemble from the identity, translated to every node: y Y_t^e
    dc.scheme = SdeScheme::GroupExponential;
    const DiffusionEnsemble e = simulate_paths(s, ChartPoint(group->identity), dc);
    rep.censored = e.censored_count(0);
    const int threads = resolve_threads(cfg.threads);
    // each worker owns whole batches so the batch sums are independent of scheduling
    parallel_ranges(nb, threads, [&](std::int64_t blo, std::int64_t bhi) {
      std::vector<double> g(dim);
      for (std::int64_t b = blo; b < bhi; ++b) {
        const std::int64_t plo = b * n / nb, phi = (b + 1) * n / nb;
        for (std::size_t node = 0; node < n_nodes; ++node) {
          double acc = 0.0;
          for (std::int64_t k = plo; k < phi; ++k) {
            if (e.censored(0, k)) continue;
            group->multiply(nodes[node], e.position(0, k), g);
            s.chart().wrap(g);
            acc += f(g);
          }
          batch[node][b] = acc;
        }
      }
    });
  } else {
    // same seed at every node: common random numbers through the path streams
    dc.scheme = SdeScheme::ItoEuler;
    for (std::size_t node = 0; node < n_nodes; ++node) {
      const DiffusionEnsemble e = simulate_paths(s, ChartPoint(nodes[node]), dc);
      rep.censored += e.censored_count(0);
      for (std::int64_t k = 0; k < n; ++k)
        if (!e.censored(0, k)) batch[node][batch_of(k)] += f(e.position(0, k));
    }
  }

  // u at every node, either from all batches or leaving batch `skip` out
  auto node_values = [&](int skip) {
    std::vector<double> u(n_nodes);
    double count = 0.0;
    for (int b = 0; b < nb; ++b)
      if (b != skip) count += batch_size(b);
    for (std::size_t node = 0; node < n_nodes; ++node) {
      double acc = 0.0;
      for (int b = 0; b < nb; ++b)
        if (b != skip) acc += batch[node][b];
      u[node] = acc / count;
    }
    return u;
  };

  struct Terms {
    double gamma_log, gammaZ_log, lu_over_u, slack;
  };
  auto terms_at = [&](const std::vector<double>& u, std::size_t base, const FrameSample<double>& fs, int scale) {
    const double hh = scale * cfg.h;
    const int off = scale == 1 ? 0 : 2;
    const double u0 = u[base];
    if (!(u0 > 0.0)) throw InsufficientSamplingError("P_t f estimate is not positive at a stencil node");
    double lu = 0.0, gam = 0.0, gamz = 0.0;
    std::vector<double> first(d);
    for (std::size_t li = 0; li < labels.size(); ++li) {
      const double up = u[base + 1 + 4 * li + off];
      const double um = u[base + 1 + 4 * li + off + 1];
      if (!(up > 0.0) || !(um > 0.0))
        throw InsufficientSamplingError("P_t f estimate is not positive at a stencil node");
      const double d1 = (up - um) / (2.0 * hh);
      if (labels[li].vertical) {
        gamz += 2.0 * (d1 / u0) * (d1 / u0);
      } else {
        first[labels[li].index] = d1;
        lu += (up - 2.0 * u0 + um) / (hh * hh);
        gam += (d1 / u0) * (d1 / u0);
      }
    }
    for (int a = 0; a < d; ++a) {
      double c = 0.0;
      for (int k = 0; k < d; ++k) c += fs.w(a, k, k);
      lu -= c * first[a];
    }
    Terms tm;
    tm.gamma_log = gam;
    tm.gammaZ_log = gamz;
    tm.lu_over_u = lu / u0;
    tm.slack = coef.lp_coefficient(t) * tm.lu_over_u + coef.constant_term(t) - gam - coef.gammaZ_weight(t) * gamz;
    return tm;
  };

  const std::vector<double> u_all = node_values(-1);
  std::vector<std::vector<double>> u_jack;
  for (int b = 0; b < nb; ++b) u_jack.push_back(node_values(b));

  rep.pass = true;
  for (std::size_t pi = 0; pi < pts.size(); ++pi) {
    const std::size_t base = pi * per_point;
    const FrameSample<double> fs = s.sample(pts[pi]);
    const Terms t1 = terms_at(u_all, base, fs, 1);
    const Terms t2 = terms_at(u_all, base, fs, 2);
    std::vector<double> jack(nb);
    double jm = 0.0;
    for (int b = 0; b < nb; ++b) {
      jack[b] = terms_at(u_jack[b], base, fs, 1).slack;
      jm += jack[b];
    }
    jm /= nb;
    double jv = 0.0;
    for (double x : jack) jv += (x - jm) * (x - jm);
    LiYauPoint lp;
    lp.point = pts[pi];
    lp.u = u_all[base];
    lp.gamma_log = t1.gamma_log;
    lp.gammaZ_log = t1.gammaZ_log;
    lp.lu_over_u = t1.lu_over_u;
    lp.slack = t1.slack;
    lp.sigma = std::sqrt((nb - 1.0) / nb * jv);
    lp.bias_budget = std::abs(t1.slack - t2.slack) / 3.0;
    lp.pass = lp.slack >= -(3.0 * lp.sigma + lp.bias_budget);
    rep.pass = rep.pass && lp.pass;
    rep.points.push_back(std::move(lp));
  }
  return rep;
}

LiYauReport liyau_check(const SubRiemannianStructure& s, const PointFunction& f, double t,
                        std::span<const ChartPoint> pts, const CDParameters& cdp, const LiYauConfig& cfg) {
  return liyau_check(s, f, t, pts, derive_constants(cdp).liyau, cfg);
}

HarnackReport harnack_check(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y,
                            const ChartPoint& z, double s_time, double t_time, const CDParameters& cdp,
                            const DiffusionConfig& cfg, const DistanceOracle& distance) {
  if (!(s_time > 0.0) || !(t_time > s_time)) throw DomainError("harnack_check needs 0 < s < t");
  HarnackReport rep;
  rep.s_time = s_time;
  rep.t_time = t_time;
  const bool same = y.vector() == z.vector();
  rep.distance = same ? DistanceBracket{} : distance(y, z);
  const DerivedConstants c = derive_constants(cdp);
  rep.factor = harnack_factor(c, s_time, t_time, rep.distance.upper);
  if (!std::isfinite(rep.factor)) {
    rep.trivial = true;
    rep.pass = true;
    return rep;
  }
  DiffusionConfig dc = cfg;
  dc.t_max = t_time;
  dc.dt = std::min(cfg.dt, s_time);
  dc.snapshot_times = {s_time, t_time};
  const DiffusionEnsemble e = simulate_paths(s, x, dc);
  rep.p_s = estimate_kernel(s, e, y, e.times[0], cfg.bandwidth);
  rep.p_t = estimate_kernel(s, e, z, e.times[1], cfg.bandwidth);
  rep.margin = rep.factor * rep.p_t.value - rep.p_s.value;
  rep.tolerance = 3.0 * std::hypot(rep.p_s.std_error, rep.factor * rep.p_t.std_error) + rep.p_s.bias +
                  rep.factor * rep.p_t.bias;
  rep.pass = rep.margin >= -rep.tolerance;
  return rep;
}

VolumeEstimate ball_volume(const SubRiemannianStructure& s, const ChartPoint& x, double r, std::int64_t n_samples,
                           const DistanceOracle& distance, std::span<const double> half_width, std::uint64_t seed) {
  if (!(r > 0.0)) throw DomainError("ball_volume needs r > 0");
  if (n_samples < 2) throw DomainError("ball_volume needs at least two samples");
  s.check_point(x);
  const int dim = s.dim();
  if (static_cast<int>(half_width.size()) != dim) throw StructuralError("half-width needs one entry per coordinate");
  double box = 1.0;
  for (double w : half_width) box *= 2.0 * w;

  RandomStream rng(seed, 0x766f6cULL);
  std::vector<double> inner(n_samples, 0.0), outer(n_samples, 0.0);
  std::vector<double> y(dim);
  FrameSample<double> fs;
  VolumeEstimate out;
  out.radius = r;
  for (std::int64_t k = 0; k < n_samples; ++k) {
    for (int a = 0; a < dim; ++a) y[a] = x[a] + half_width[a] * (2.0 * rng.uniform() - 1.0);
    s.chart().wrap(y);
    if (!s.chart().contains(y)) continue;
    const DistanceBracket br = distance(x, ChartPoint(y));
    if (br.lower > r) continue;
    s.evaluate(std::span<const double>(y), fs);
    const double w = box * fs.density;
    outer[k] = w;
    if (br.upper <= r) {
      inner[k] = w;
    } else {
      ++out.indeterminate;
    }
  }
  const BatchStats lo = batch_stats(inner);
  const BatchStats hi = batch_stats(outer);
  out.lower = lo.mean;
  out.upper = hi.mean;
  out.value = 0.5 * (lo.mean + hi.mean);
  out.std_error = std::max(lo.std_error, hi.std_error);
  return out;
}

GrowthFit volume_growth_fit(std::span<const VolumeEstimate> volumes) {
  const std::size_t n = volumes.size();
  if (n < 2) throw DomainError("volume_growth_fit needs at least two radii");
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(volumes[k].value > 0.0) || !(volumes[k].radius > 0.0))
      throw InsufficientSamplingError("volume estimate is not positive");
    lx[k] = std::log(volumes[k].radius);
    ly[k] = std::log(volumes[k].value);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  GrowthFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double res = ly[k] - fit.intercept - fit.exponent * lx[k];
    ss += res * res;
  }
  fit.std_error = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  fit.min_local = kInf;
  fit.max_local = -kInf;
  for (std::size_t k = 1; k < n; ++k) {
    const double slope = (ly[k] - ly[k - 1]) / (lx[k] - lx[k - 1]);
    fit.min_local = std::min(fit.min_local, slope);
    fit.max_local = std::max(fit.max_local, slope);
  }
  return fit;
}

SemigroupCheck semigroup_check(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y, double t,
                               double s_time, const DiffusionConfig& cfg) {
  if (!(t > 0.0) || !(s_time > 0.0)) throw DomainError("semigroup_check needs positive times");
  SemigroupCheck out;

  DiffusionConfig direct = cfg;
  direct.t_max = t + s_time;
  direct.snapshot_times = {t, t + s_time};
  const DiffusionEnsemble ex = simulate_paths(s, x, direct);
  out.direct = estimate_kernel(s, ex, y, ex.times[1], cfg.bandwidth);

  DiffusionConfig from_y = cfg;
  from_y.t_max = s_time;
  from_y.snapshot_times = {s_time};
  from_y.seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;
  const DiffusionEnsemble ey = simulate_paths(s, y, from_y);
  const auto bw = scott_bandwidth(s.chart(), ey, 0, cfg.bandwidth);

  // outer average over at most 4000 endpoints Y_t of the ensemble from x
  const std::int64_t n_outer = std::min<std::int64_t>(ex.n_paths, 4000);
  std::vector<double> vals(n_outer, 0.0);
  parallel_ranges(n_outer, resolve_threads(cfg.threads), [&](std::int64_t lo, std::int64_t hi) {
    FrameSample<double> fs;
    for (std::int64_t k = lo; k < hi; ++k) {
      if (ex.censored(0, k)) continue;
      const auto zk = ex.position(0, k);
      s.evaluate(zk, fs);
      if (!(fs.density > 0.0)) continue;
      double acc = 0.0;
      for (std::int64_t j = 0; j < ey.n_paths; ++j) {
        if (ey.censored(0, j)) continue;
        const KernelPair kp = kernel_weights(s.chart(), zk, ey.position(0, j), bw);
        acc += (4.0 * kp.h1 - kp.h2) / 3.0;
      }
      vals[k] = acc / static_cast<double>(ey.n_paths) / fs.density;
    }
  });
  const BatchStats st = batch_stats(vals);
  out.convolution = st.mean;
  out.convolution_stderr = st.std_error;
  out.difference = out.direct.value - out.convolution;
  out.tolerance = 3.0 * std::hypot(out.direct.std_error, out.convolution_stderr) + out.direct.bias;
  out.pass = std::abs(out.difference) <= out.tolerance;
  return out;
}

DecayFit gaussian_decay_fit(std::span<const double> squared_distances, std::span<const KernelEstimate> kernels,
                            double t, double eps) {
  if (squared_distances.size() != kernels.size() || kernels.size() < 2)
    throw DomainError("gaussian_decay_fit needs matching inputs with at least two points");
  if (!(t > 0.0) || !(eps > 0.0)) throw DomainError("gaussian_decay_fit needs t > 0 and eps > 0");
  // weighted least squares with weights (p / stderr)^2 on ln p
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const double p = kernels[k].value;
    if (!(p > 0.0)) throw InsufficientSamplingError("kernel estimate is not positive");
    const double rel = std::max(kernels[k].std_error / p, 1e-6);
    const double w = 1.0 / (rel * rel);
    const double xk = squared_distances[k];
    const double yk = std::log(p);
    sw += w;
    sx += w * xk;
    sy += w * yk;
    sxx += w * xk * xk;
    sxy += w * xk * yk;
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw DomainError("gaussian_decay_fit needs distinct distances");
  DecayFit fit;
  fit.slope = (sw * sxy - sx * sy) / det;
  fit.std_error = std::sqrt(sw / det);
  fit.threshold = -(1.0 - 0.15) / ((4.0 + eps) * t);
  fit.pass = fit.slope <= fit.threshold;
  return fit;
}

void write_ensemble(std::ostream& os, const DiffusionEnsemble& e) {
  const std::uint64_t rows = static_cast<std::uint64_t>(e.n_paths) * e.times.size();
  os.write("SRHE", 4);
  put_le<std::uint16_t>(os, 1);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.dim));
  put_le<std::uint64_t>(os, rows);
  put_le<std::uint64_t>(os, e.seed);
  // columns; censored states are written as NaN coordinates
  for (std::size_t k = 0; k < e.times.size(); ++k)
    for (std::int64_t p = 0; p < e.n_paths; ++p) put_le<double>(os, static_cast<double>(p));
  for (std::size_t k = 0; k < e.times.size(); ++k)
    for (std::int64_t p = 0; p < e.n_paths; ++p) put_le<double>(os, e.times[k]);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int a = 0; a < e.dim; ++a)
    for (std::size_t k = 0; k < e.times.size(); ++k)
      for (std::int64_t p = 0; p < e.n_paths; ++p)
        put_le<double>(os, e.censored(static_cast<int>(k), p) ? nan : e.position(static_cast<int>(k), p)[a]);
  if (!os) throw FormatError("failed to write ensemble");
}

DiffusionEnsemble read_ensemble(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "SRHE", 4) != 0) throw FormatError("not an SRHE ensemble file");
  const auto version = get_le<std::uint16_t>(is);
  if (version != 1) throw FormatError("unsupported SRHE version " + std::to_string(version));
  const auto dim = get_le<std::uint32_t>(is);
  const auto rows = get_le<std::uint64_t>(is);
  const auto seed = get_le<std::uint64_t>(is);
  if (dim == 0 || dim > 64) throw FormatError("implausible SRHE dimension");
  if (rows > (std::uint64_t{1} << 34)) throw FormatError("implausible SRHE row count");
  std::vector<double> ids(rows), ts(rows), coords(rows * dim);
  for (auto& v : ids) v = get_le<double>(is);
  for (auto& v : ts) v = get_le<double>(is);
  for (auto& v : coords) v = get_le<double>(is);

  DiffusionEnsemble e;
  e.dim = static_cast<int>(dim);
  e.seed = seed;
  std::int64_t n_paths = 0;
  for (double id : ids) n_paths = std::max<std::int64_t>(n_paths, static_cast<std::int64_t>(id) + 1);
  if (rows == 0 || rows % static_cast<std::uint64_t>(n_paths) != 0) throw FormatError("ragged SRHE columns");
  e.n_paths = n_paths;
  const std::size_t n_snap = rows / n_paths;
  for (std::size_t k = 0; k < n_snap; ++k) e.times.push_back(ts[k * n_paths]);
  e.positions.assign(n_snap, std::vector<double>(n_paths * dim));
  e.censor_time.assign(n_paths, kInf);
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t k = row / n_paths;
    const auto p = static_cast<std::int64_t>(ids[row]);
    if (p < 0 || p >= n_paths) throw FormatError("bad SRHE path id");
    for (std::uint32_t a = 0; a < dim; ++a) {
      const double c = coords[a * rows + row];
      e.positions[k][p * dim + a] = c;
      if (std::isnan(c)) e.censor_time[p] = std::min(e.censor_time[p], e.times[k]);
    }
  }
  e.start = ChartPoint(std::vector<double>(dim, 0.0));
  return e;
}

}  // namespace srg
