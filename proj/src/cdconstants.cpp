#include "srgeom/cdconstants.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "srgeom/curvature.hpp"

namespace srg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return kInf;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return -kInf;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m.rows() - 1);
}

// (kappa + rho2) / rho2, the rho2 -> infinity limit being 1
double kappa_ratio(const CDParameters& p) { return p.rho2 ? (p.kappa + *p.rho2) / *p.rho2 : 1.0; }

}  // namespace

CDParameters CDParameters::sub_riemannian(double rho1, double rho2, double kappa, int d, int vertical_rank) {
  CDParameters p;
  p.rho1 = rho1;
  p.rho2 = rho2;
  p.kappa = kappa;
  p.d = d;
  p.vertical_rank = vertical_rank;
  p.validate();
  return p;
}

CDParameters CDParameters::riemannian(double rho1, int d) {
  CDParameters p;
  p.rho1 = rho1;
  p.d = d;
  p.validate();
  return p;
}

void CDParameters::validate() const {
  if (d < 1) throw DomainError("CD parameters need d >= 1");
  if (!std::isfinite(rho1)) throw DomainError("rho1 must be finite");
  if (vertical_rank < 0) throw DomainError("vertical rank must be nonnegative");
  if (vertical_rank == 0) {
    if (kappa != 0.0) throw DomainError("Riemannian mode needs kappa = 0");
    if (rho2) throw DomainError("Riemannian mode has no rho2");
    return;
  }
  if (!rho2 || !(*rho2 > 0.0) || !std::isfinite(*rho2)) throw DomainError("rho2 must be positive");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("kappa must be positive");
}

double CDParameters::dimension_factor() const { return rho2 ? 1.0 + 1.5 * kappa / *rho2 : 1.0; }

double Constant::value() const {
  if (reason_) throw DomainError("constant not applicable: " + *reason_);
  return value_;
}

const std::string& Constant::reason() const {
  static const std::string none;
  return reason_ ? *reason_ : none;
}

Constant DerivedConstants::kernel_global_bound(double t) const {
  if (!(params.rho1 > 0.0)) return Constant::not_applicable("global kernel bound needs rho1 > 0");
  if (!(t > 0.0)) throw DomainError("kernel bound needs t > 0");
  return Constant::of(std::pow(1.0 - std::exp(-alpha * t), -0.5 * D));
}

DerivedConstants derive_constants(const CDParameters& p) {
  p.validate();
  DerivedConstants c;
  c.params = p;
  const double d = p.d;
  const double factor = p.dimension_factor();
  c.D = d * factor;
  c.alpha = p.rho2 ? 2.0 * p.rho1 * *p.rho2 / (3.0 * (*p.rho2 + p.kappa)) : 2.0 * p.rho1 / 3.0;

  c.liyau.gammaZ_rate = p.rho2 ? 2.0 * *p.rho2 / 3.0 : 0.0;
  c.liyau.lp_const = factor;
  c.liyau.lp_rate = 2.0 * p.rho1 / 3.0;
  c.liyau.c_lin = d * p.rho1 * p.rho1 / 6.0;
  c.liyau.c_const = -0.5 * p.rho1 * d * factor;
  c.liyau.c_inv = 0.5 * d * factor * factor;

  c.harnack_exponent = 0.5 * c.D;
  c.harnack_gauss = c.D / d;
  c.hausdorff_bound = c.D;

  if (p.rho1 > 0.0) {
    const double ratio = kappa_ratio(p) / p.rho1;  // (kappa + rho2) / (rho1 rho2)
    c.diameter_bound = 2.0 * std::sqrt(3.0) * std::numbers::pi * std::sqrt(ratio * factor * d);
    c.isoperimetric_const = Constant::of(1.5 * c.D * std::sqrt(ratio / d));
    c.poincare_const = Constant::of(6.0 * c.D * std::sqrt(ratio / d));
    if (p.riemannian_mode()) {
      c.lambda1_bound = p.d > 1 ? Constant::of(p.rho1 * d / (d - 1.0))
                                : Constant::not_applicable("Lichnerowicz bound needs d >= 2");
    } else {
      c.lambda1_bound = Constant::of(p.rho1 * *p.rho2 / ((d - 1.0) / d * *p.rho2 + p.kappa));
    }
  } else {
    c.diameter_bound = kInf;
    c.isoperimetric_const = Constant::not_applicable("isoperimetric constant needs rho1 > 0");
    c.poincare_const = Constant::not_applicable("Poincare constant needs rho1 > 0");
    c.lambda1_bound = Constant::not_applicable("eigenvalue bound needs rho1 > 0");
  }
  return c;
}

double harnack_factor(const DerivedConstants& c, double s, double t, double r) {
  if (!(s > 0.0) || !(t > s)) throw DomainError("harnack_factor needs 0 < s < t");
  return std::pow(t / s, 0.5 * c.D) * std::exp(c.harnack_gauss * r * r / (4.0 * (t - s)));
}

CertificateReport certify_bounds(const SubRiemannianStructure& s, std::span<const ChartPoint> pts, double rho1,
                                 double rho2, double kappa, double tol) {
  if (pts.empty()) throw DomainError("certify_bounds needs at least one point");
  const int d = s.d();
  const int v = s.v();
  CertificateReport rep;
  rep.rho1 = rho1;
  rep.rho2 = rho2;
  rep.kappa = kappa;
  rep.tol = tol;
  rep.min_r_margin = kInf;
  rep.min_t_margin = kInf;
  rep.pass = true;
  for (const ChartPoint& x : pts) {
    Eigen::MatrixXd Q = r_form(s, x, RRoute::Structural);
    Q.topLeftCorner(d, d) -= rho1 * Eigen::MatrixXd::Identity(d, d);
    // Gamma^Z = 2 |z|^2 over ordered pairs
    if (v > 0) Q.bottomRightCorner(v, v) -= 2.0 * rho2 * Eigen::MatrixXd::Identity(v, v);
    PointCertificate pc;
    pc.point = x;
    pc.r_margin = min_eigenvalue(Q);
    pc.t_margin = kappa - max_eigenvalue(t_form(s, x));
    pc.pass = pc.r_margin >= -tol && pc.t_margin >= -tol;
    rep.min_r_margin = std::min(rep.min_r_margin, pc.r_margin);
    rep.min_t_margin = std::min(rep.min_t_margin, pc.t_margin);
    rep.pass = rep.pass && pc.pass;
    rep.points.push_back(std::move(pc));
  }
  return rep;
}

CertificateReport certify_bounds(const SubRiemannianStructure& s, std::span<const ChartPoint> pts,
                                 const CDParameters& p, double tol) {
  return certify_bounds(s, pts, p.rho1, p.rho2.value_or(0.0), p.kappa, tol);
}

std::vector<ParetoPoint> pareto_scan(const SubRiemannianStructure& s, std::span<const ChartPoint> pts,
                                     std::span<const double> rho2_grid) {
  if (rho2_grid.empty()) throw DomainError("pareto_scan needs a nonempty rho2 grid");
  if (pts.empty()) throw DomainError("pareto_scan needs at least one point");
  const int d = s.d();
  const int v = s.v();
  std::vector<Eigen::MatrixXd> forms;
  for (const ChartPoint& x : pts) forms.push_back(r_form(s, x, RRoute::Structural));

  std::vector<ParetoPoint> out;
  for (double rho2 : rho2_grid) {
    if (!(rho2 > 0.0)) throw DomainError("rho2 grid values must be positive");
    ParetoPoint pp;
    pp.rho2 = rho2;
    pp.rho1 = kInf;
    pp.feasible = true;
    for (const Eigen::MatrixXd& Q : forms) {
      const Eigen::MatrixXd H = Q.topLeftCorner(d, d);
      if (v == 0) {
        pp.rho1 = std::min(pp.rho1, min_eigenvalue(H));
        continue;
      }
      const Eigen::MatrixXd C = Q.topRightCorner(d, v);
      const Eigen::MatrixXd V = Q.bottomRightCorner(v, v) - 2.0 * rho2 * Eigen::MatrixXd::Identity(v, v);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
      const auto& lam = es.eigenvalues();
      const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
      const double eps = 1e-12 * scale;
      if (lam(0) < -eps) {
        pp.feasible = false;
        pp.rho1 = -kInf;
        break;
      }
      // pseudo-inverse on the range of V; a coupling into the kernel of V
      // cannot be absorbed by any finite rho1
      Eigen::MatrixXd Vp = Eigen::MatrixXd::Zero(v, v);
      bool blocked = false;
      for (int a = 0; a < v; ++a) {
        const Eigen::VectorXd u = es.eigenvectors().col(a);
        if (lam(a) > eps) {
          Vp += u * u.transpose() / lam(a);
        } else if ((C * u).norm() > 1e-9 * std::max(1.0, C.norm())) {
          blocked = true;
        }
      }
      if (blocked) {
        pp.feasible = false;
        pp.rho1 = -kInf;
        break;
      }
      pp.rho1 = std::min(pp.rho1, min_eigenvalue(H - C * Vp * C.transpose()));
    }
    out.push_back(pp);
  }
  return out;
}

double entropy_diameter_integral(double D, double alpha) {
  if (!(D > 0.0) || !(alpha > 0.0)) throw DomainError("entropy integral needs D > 0 and alpha > 0");
  // substitute x = u^2 to remove the endpoint singularity:
  // int_0^inf 4D dx / (sqrt(x)(2x + alpha D)) = int_0^inf 8D du / (2u^2 + alpha D)
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double u) { return 8.0 * D / (2.0 * u * u + alpha * D); };
  return integrator.integrate(f, 0.0, kInf);
}

QuadratureResult entropy_diameter_quadrature(const CDParameters& p) {
  p.validate();
  QuadratureResult r;
  if (!(p.rho1 > 0.0)) {
    r.numeric = Constant::not_applicable("diameter bound needs rho1 > 0");
    r.closed_form = r.numeric;
    r.relative_error = r.numeric;
    return r;
  }
  const DerivedConstants c = derive_constants(p);
  const double num = entropy_diameter_integral(c.D, c.alpha);
  r.numeric = Constant::of(num);
  r.closed_form = Constant::of(c.diameter_bound);
  r.relative_error = Constant::of(std::abs(num - c.diameter_bound) / c.diameter_bound);
  return r;
}

}  // namespace srg
