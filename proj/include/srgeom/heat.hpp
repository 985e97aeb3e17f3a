#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srgeom/cdconstants.hpp"
#include "srgeom/structure.hpp"

namespace srg {

enum class SdeScheme {
  /// Euler-Maruyama for the Ito form: drift X0 + sum_i (D X_i) X_i.
  ItoEuler,
  /// Stochastic Heun predictor-corrector for the Stratonovich form.
  HeunStratonovich,
  /// g <- g exp(sqrt(2) sum_i dB_i X_i) through the group law; needs X0 = 0.
  GroupExponential,
};

const char* to_string(SdeScheme s);
SdeScheme parse_scheme(const std::string& name);

struct DiffusionConfig {
  std::int64_t n_paths = 10000;
  double dt = 1e-3;
  double t_max = 1.0;
  std::uint64_t seed = 1;
  /// Multiplier on the per-coordinate Scott bandwidth.
  double bandwidth = 1.0;
  SdeScheme scheme = SdeScheme::ItoEuler;
  /// Paths leaving x0 +- censor_half_width (non-periodic axes) or the chart
  /// are censored. Unset: chart bounds only.
  std::optional<double> censor_half_width;
  /// Times at which positions are stored; empty means {t_max}.
  std::vector<double> snapshot_times;
  /// 0: SRC_THREADS, then the hardware concurrency.
  int threads = 0;

  void validate() const;
};

/// Worker count for a requested value (0 = environment, then hardware).
int resolve_threads(int requested);

struct DiffusionEnsemble {
  int dim = 0;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  ChartPoint start;
  std::vector<double> times;
  /// positions[k][path * dim + a] at times[k]; censored paths are frozen at
  /// their last admissible position.
  std::vector<std::vector<double>> positions;
  /// +infinity for paths that were never censored.
  std::vector<double> censor_time;

  std::span<const double> position(int snapshot, std::int64_t path) const {
    return {positions[snapshot].data() + path * dim, static_cast<std::size_t>(dim)};
  }
  bool censored(int snapshot, std::int64_t path) const { return censor_time[path] <= times[snapshot]; }
  std::int64_t censored_count(int snapshot) const;
  /// Throws DomainError when no snapshot was stored at t.
  int snapshot_index(double t) const;
};

DiffusionEnsemble simulate_paths(const SubRiemannianStructure& s, const ChartPoint& x0, const DiffusionConfig& cfg);

/// The Ito correction sum_i (D X_i) X_i at x, in chart components.
std::vector<double> ito_correction(const SubRiemannianStructure& s, std::span<const double> x);

using PointFunction = std::function<double(std::span<const double>)>;

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t censored = 0;
};

/// Batch-means Monte Carlo estimate of P_t f(x). Censored paths contribute 0
/// (killed process), so f = 1 returns the survival fraction.
MeanEstimate estimate_Ptf(const DiffusionEnsemble& e, const PointFunction& f, double t);
MeanEstimate estimate_Ptf(const SubRiemannianStructure& s, const ChartPoint& x, const PointFunction& f, double t,
                          const DiffusionConfig& cfg);

struct KernelEstimate {
  /// p(x, y, t) with respect to mu, bias-corrected.
  double value = 0.0;
  double std_error = 0.0;
  double n_eff = 0.0;
  /// |p_h - p_2h| / 3, the leading smoothing bias of the raw estimate.
  double bias = 0.0;
  double raw = 0.0;
  std::vector<double> bandwidth;
};

/// Gaussian product-kernel density at y in chart coordinates divided by the
/// density of mu at y.
KernelEstimate estimate_kernel(const SubRiemannianStructure& s, const DiffusionEnsemble& e, const ChartPoint& y,
                               double t, double bandwidth = 1.0);
KernelEstimate estimate_kernel(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y, double t,
                               const DiffusionConfig& cfg);

struct LiYauConfig {
  std::int64_t n_paths = 1000000;
  double dt = 1e-2;
  std::uint64_t seed = 7;
  /// Stencil step along frame flows; h and 2h are both evaluated.
  double h = 0.1;
  std::optional<double> censor_half_width = 50.0;
  int threads = 0;
};

struct LiYauPoint {
  ChartPoint point;
  double u = 0.0;
  double gamma_log = 0.0;
  double gammaZ_log = 0.0;
  double lu_over_u = 0.0;
  /// Right side minus left side of the estimate.
  double slack = 0.0;
  double sigma = 0.0;
  double bias_budget = 0.0;
  bool pass = false;
};

struct LiYauReport {
  double t = 0.0;
  LiYauCoefficients coefficients;
  std::vector<LiYauPoint> points;
  std::int64_t censored = 0;
  bool common_random_numbers = false;
  bool pass = false;
};

/// Checks Gamma(ln u) + c_Z t Gamma^Z(ln u) <= a(t) Lu/u + b(t) for u = P_t f
/// from central differences of Monte Carlo estimates of u along frame flows.
LiYauReport liyau_check(const SubRiemannianStructure& s, const PointFunction& f, double t,
                        std::span<const ChartPoint> pts, const LiYauCoefficients& coef, const LiYauConfig& cfg);
LiYauReport liyau_check(const SubRiemannianStructure& s, const PointFunction& f, double t,
                        std::span<const ChartPoint> pts, const CDParameters& cdp, const LiYauConfig& cfg);

/// Distance bracket: lower <= d(x, y) <= upper.
struct DistanceBracket {
  double lower = 0.0;
  double upper = 0.0;
};

using DistanceOracle = std::function<DistanceBracket(const ChartPoint&, const ChartPoint&)>;

struct HarnackReport {
  double s_time = 0.0;
  double t_time = 0.0;
  KernelEstimate p_s;
  KernelEstimate p_t;
  DistanceBracket distance;
  /// (t/s)^(D/2) exp((D/d) r^2 / (4 (t - s))) at the upper distance.
  double factor = 0.0;
  /// factor * p_t - p_s.
  double margin = 0.0;
  double tolerance = 0.0;
  bool trivial = false;
  bool pass = false;
};

/// p(x, y, s) <= p(x, z, t) * factor, tested within three combined standard
/// errors plus the bandwidth bias budgets.
HarnackReport harnack_check(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y,
                            const ChartPoint& z, double s_time, double t_time, const CDParameters& cdp,
                            const DiffusionConfig& cfg, const DistanceOracle& distance);

struct VolumeEstimate {
  double radius = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  /// Bracket accounting over indeterminate samples.
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t indeterminate = 0;
};

/// Monte Carlo mu(B(x, r)) over the box x +- half_width with samples drawn
/// from the counter-based stream `seed`.
VolumeEstimate ball_volume(const SubRiemannianStructure& s, const ChartPoint& x, double r, std::int64_t n_samples,
                           const DistanceOracle& distance, std::span<const double> half_width, std::uint64_t seed);

struct GrowthFit {
  double exponent = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  /// Smallest and largest slope between consecutive radii.
  double min_local = 0.0;
  double max_local = 0.0;
};

/// Least-squares slope of log mu(B(r)) against log r.
GrowthFit volume_growth_fit(std::span<const VolumeEstimate> volumes);

struct SemigroupCheck {
  KernelEstimate direct;
  double convolution = 0.0;
  double convolution_stderr = 0.0;
  double difference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// p(x, y, t + s) against E[p(Y_t, y, s)] with Y_t from x; the inner kernel
/// uses the symmetry p(z, y, s) = p(y, z, s) and an ensemble started at y.
SemigroupCheck semigroup_check(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y, double t,
                               double s_time, const DiffusionConfig& cfg);

struct DecayFit {
  double slope = 0.0;
  double std_error = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Regression of ln p(x, y_k, t) on d(x, y_k)^2; passes when the slope is at
/// most -(1 - 0.15) / ((4 + eps) t).
DecayFit gaussian_decay_fit(std::span<const double> squared_distances, std::span<const KernelEstimate> kernels,
                            double t, double eps = 1.0);

/// Columnar binary export: "SRHE", u16 version, u32 dim, u64 rows, u64 seed,
/// then little-endian f64 columns path id, t, coords.
void write_ensemble(std::ostream& os, const DiffusionEnsemble& e);
DiffusionEnsemble read_ensemble(std::istream& is);

}  // namespace srg
