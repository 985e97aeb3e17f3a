#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "srgeom/structure.hpp"

namespace srg {

struct GeodesicState {
  ChartPoint position;
  /// Horizontal velocity in frame components.
  std::vector<double> u;
  /// Constant vertical multipliers over ordered pairs; the equation is
  /// u' = -Gamma(u, u) + sum_p a_p J_p u.
  std::vector<double> a;
};

struct GeodesicSample {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> u;
};

struct Trajectory {
  std::vector<GeodesicSample> samples;
  std::vector<double> a;

  const GeodesicSample& back() const { return samples.back(); }
  /// Columns t, coords..., u..., a...
  void write_csv(std::ostream& os) const;
};

/// The integrator left the chart or met a singular frame.
class GeodesicBoundaryError : public std::runtime_error {
 public:
  GeodesicBoundaryError(const std::string& what, GeodesicState last, double t)
      : std::runtime_error(what), last_(std::move(last)), t_(t) {}
  const GeodesicState& last_state() const { return last_; }
  double time() const { return t_; }

 private:
  GeodesicState last_;
  double t_;
};

/// Classic RK4 with `steps` equal steps on [0, T]; records every
/// `record_every`-th state (always the first and the last).
Trajectory integrate_geodesic(const SubRiemannianStructure& s, const GeodesicState& state0, double T, int steps,
                              int record_every = 1);

struct ShootingConfig {
  int starts = 32;
  int steps = 160;
  int max_iterations = 60;
  double tolerance = 1e-10;
  /// Range of |b| = |a| T explored by the initial guesses.
  double b_range = 8.0;
};

enum class DistanceStatus { Converged, MaxIter, LowerBoundOnly };

struct DistanceResult {
  /// Shortest converged shooting length (an upper bound on the distance).
  double value = 0.0;
  /// Horizontal-projection bound on graded charts, 0 otherwise.
  double lower_bound = 0.0;
  DistanceStatus status = DistanceStatus::LowerBoundOnly;
  double residual = 0.0;
  int start_index = -1;
  Trajectory path;
};

DistanceResult cc_distance(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y,
                           const ShootingConfig& cfg = {});

/// |proj_H(y - x)| for graded charts (first d coordinates), else 0.
double horizontal_projection_bound(const SubRiemannianStructure& s, const ChartPoint& x, const ChartPoint& y);

struct DualityCheck {
  /// d theta_p(V1, V2) by Cartan's formula from raw brackets.
  std::vector<double> cartan;
  /// -2 g(V1, J_p V2); the factor 2 collects the two orientations of the pair.
  std::vector<double> j_side;
  std::vector<double> residual;
};

/// V1, V2 given by constant frame components.
DualityCheck dtheta_duality_residual(const SubRiemannianStructure& s, const ChartPoint& x, std::span<const double> v1,
                                     std::span<const double> v2);

/// Closed-form distance on the first Heisenberg group in exponential
/// coordinates (x, y, z) with X1 = dx - (y/2) dz, X2 = dy + (x/2) dz.
/// Horizontal projections of geodesics are circular arcs; an arc of length T
/// turning through 2 theta has chord T sin(theta)/theta and encloses area
/// T^2 (2 theta - sin 2 theta) / (8 theta^2).
double heisenberg_distance(std::span<const double> p, std::span<const double> q);

const char* to_string(DistanceStatus s);

}  // namespace srg
