#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srgeom/structure.hpp"

namespace srg {

/// Curvature-dimension parameters (rho1, rho2, kappa) for a structure of
/// horizontal rank d. `rho2` is absent in the Riemannian mode, where there is
/// no vertical layer and kappa must be 0.
struct CDParameters {
  double rho1 = 0.0;
  std::optional<double> rho2;
  double kappa = 0.0;
  int d = 1;
  int vertical_rank = 0;

  static CDParameters sub_riemannian(double rho1, double rho2, double kappa, int d, int vertical_rank);
  static CDParameters riemannian(double rho1, int d);

  bool riemannian_mode() const { return vertical_rank == 0; }
  /// Throws DomainError when the invariants fail.
  void validate() const;
  /// 1 + 3 kappa / (2 rho2), or 1 in the Riemannian mode.
  double dimension_factor() const;
};

/// A derived constant that may not exist for the given parameters (most of
/// the global results need rho1 > 0). Never carries NaN.
class Constant {
 public:
  static Constant of(double value) { return Constant(value, {}); }
  static Constant not_applicable(std::string reason) { return Constant(0.0, std::move(reason)); }

  bool applicable() const { return !reason_; }
  /// Throws DomainError when not applicable.
  double value() const;
  double value_or(double fallback) const { return applicable() ? value_ : fallback; }
  const std::string& reason() const;

 private:
  Constant(double v, std::optional<std::string> r) : value_(v), reason_(std::move(r)) {}
  double value_;
  std::optional<std::string> reason_;
};

/// Coefficients of the gradient estimate
///   Gamma(ln u) + gammaZ_rate * t * GammaZ(ln u)
///     <= (lp_const - lp_rate * t) * Lu/u + c_lin * t + c_const + c_inv / t
/// for u = P_t f.
struct LiYauCoefficients {
  double gammaZ_rate = 0.0;
  double lp_const = 1.0;
  double lp_rate = 0.0;
  double c_lin = 0.0;
  double c_const = 0.0;
  double c_inv = 0.0;

  double gammaZ_weight(double t) const { return gammaZ_rate * t; }
  double lp_coefficient(double t) const { return lp_const - lp_rate * t; }
  double constant_term(double t) const { return c_lin * t + c_const + c_inv / t; }
};

struct DerivedConstants {
  CDParameters params;
  double D = 0.0;
  double alpha = 0.0;
  LiYauCoefficients liyau;
  double harnack_exponent = 0.0;  // D / 2
  double harnack_gauss = 0.0;     // D / d
  double hausdorff_bound = 0.0;   // D
  /// +infinity when rho1 <= 0.
  double diameter_bound = 0.0;
  Constant lambda1_bound = Constant::of(0.0);
  Constant isoperimetric_const = Constant::of(0.0);
  Constant poincare_const = Constant::of(0.0);

  /// (1 - exp(-alpha t))^(-D/2); needs rho1 > 0.
  Constant kernel_global_bound(double t) const;
};

DerivedConstants derive_constants(const CDParameters& p);

/// (t/s)^(D/2) * exp((D/d) r^2 / (4 (t - s))), the parabolic Harnack factor.
double harnack_factor(const DerivedConstants& c, double s, double t, double r);

struct PointCertificate {
  ChartPoint point;
  /// Smallest eigenvalue of Q - rho1 P_H - rho2 P_V.
  double r_margin = 0.0;
  /// kappa minus the largest eigenvalue of the T form.
  double t_margin = 0.0;
  bool pass = false;
};

struct CertificateReport {
  double rho1 = 0.0, rho2 = 0.0, kappa = 0.0, tol = 0.0;
  std::vector<PointCertificate> points;
  double min_r_margin = 0.0;
  double min_t_margin = 0.0;
  bool pass = false;
};

CertificateReport certify_bounds(const SubRiemannianStructure& s, std::span<const ChartPoint> pts, double rho1,
                                 double rho2, double kappa, double tol);
CertificateReport certify_bounds(const SubRiemannianStructure& s, std::span<const ChartPoint> pts,
                                 const CDParameters& p, double tol);

struct ParetoPoint {
  double rho2 = 0.0;
  double rho1 = 0.0;
  /// False when the vertical block alone violates rho2 somewhere; rho1 is
  /// then -infinity.
  bool feasible = false;
};

/// For each rho2, the largest rho1 with Q - rho1 P_H - rho2 P_V >= 0 at every
/// point, via the Schur complement of the vertical block.
std::vector<ParetoPoint> pareto_scan(const SubRiemannianStructure& s, std::span<const ChartPoint> pts,
                                     std::span<const double> rho2_grid);

struct QuadratureResult {
  Constant numeric = Constant::of(0.0);
  Constant closed_form = Constant::of(0.0);
  Constant relative_error = Constant::of(0.0);
};

/// -2 int_0^inf sqrt(x) Phi''(x) dx with Phi''(x) = -2D / (x (2x + alpha D)),
/// next to the closed-form diameter bound.
QuadratureResult entropy_diameter_quadrature(const CDParameters& p);
/// The same integral for explicit (D, alpha).
double entropy_diameter_integral(double D, double alpha);

}  // namespace srg
