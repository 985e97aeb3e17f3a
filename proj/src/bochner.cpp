#include "srgeom/bochner.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "srgeom/curvature.hpp"
#include "srgeom/rng.hpp"

namespace srg {

double horizontal_bochner_residual(FieldDerivatives& fd) {
  const SubRiemannianStructure& s = fd.structure();
  const int d = s.d();
  const int v = s.v();
  const auto& w = fd.tables();
  const FormValue fv = forms(fd);
  const Eigen::MatrixXd hess = sym_hessian(fd);

  std::vector<double> g(d);
  for (int i = 0; i < d; ++i) g[i] = fd.Xf(i);

  double rhs = 0.0;
  for (int l = 0; l < d; ++l) {
    double t = hess(l, l);
    for (int i = 0; i < d; ++i) t -= w.w(i, l, l) * g[i];
    rhs += t * t;
  }
  for (int l = 0; l < d; ++l)
    for (int j = l + 1; j < d; ++j) {
      double t = hess(l, j);
      for (int i = 0; i < d; ++i) t -= 0.5 * (w.w(i, l, j) + w.w(i, j, l)) * g[i];
      rhs += 2.0 * t * t;
    }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int p = 0; p < v; ++p) rhs -= 2.0 * 2.0 * w.g(i, j, p) * fd.word({X(j), Zv(p)}) * g[i];
  rhs += r_value(fd);
  return fv.gamma2 - rhs;
}

double horizontal_bochner_residual(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 3);
  return horizontal_bochner_residual(fd);
}

double vertical_bochner_residual(FieldDerivatives& fd) {
  const int d = fd.structure().d();
  const FormValue fv = forms(fd);
  double rhs = 0.0;
  for (int p = 0; p < fd.structure().v(); ++p)
    for (int j = 0; j < d; ++j) {
      const double xz = fd.word({X(j), Zv(p)});
      rhs += 2.0 * xz * xz;
    }
  return fv.gamma2Z - rhs;
}

double vertical_bochner_residual(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 3);
  return vertical_bochner_residual(fd);
}

BochnerResidual bochner_residuals(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 3);
  BochnerResidual r;
  r.horizontal = horizontal_bochner_residual(fd);
  r.vertical = vertical_bochner_residual(fd);
  r.point = x;
  r.field_id = f.id();
  return r;
}

double cd_slack(const FormValue& fv, int d, double nu, double rho1, double rho2, double kappa) {
  if (!(nu > 0.0)) throw DomainError("cd_slack needs nu > 0");
  return fv.gamma2 + nu * fv.gamma2Z - fv.lf * fv.lf / d - (rho1 - kappa / nu) * fv.gamma - rho2 * fv.gammaZ;
}

double cd_slack(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x, double nu, double rho1,
                double rho2, double kappa) {
  if (!(nu > 0.0)) throw DomainError("cd_slack needs nu > 0");
  return cd_slack(forms(s, f, x), s.d(), nu, rho1, rho2, kappa);
}

double cd_slack(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x, double nu,
                const CDParameters& p) {
  return cd_slack(s, f, x, nu, p.rho1, p.rho2.value_or(0.0), p.kappa);
}

SlackMinimum cd_slack_minimum(const SubRiemannianStructure& s, const ChartPoint& x, double nu, double rho1,
                              double rho2, double kappa) {
  const int dim = s.dim();
  const JetLayout& layout = JetLayout::get(dim, 3);
  // monomials (y - x)^e with 1 <= |e| <= 3; constants do not enter the slack
  std::vector<std::vector<int>> basis;
  for (int k = 1; k < layout.size(); ++k) {
    auto e = layout.exponents(k);
    basis.emplace_back(e.begin(), e.end());
  }
  const int n = static_cast<int>(basis.size());
  std::vector<double> center(x.coords().begin(), x.coords().end());
  std::vector<double> unit(dim, 1.0);
  auto field_of = [&](const std::vector<std::pair<int, double>>& coefs) {
    std::vector<Monomial> terms;
    for (auto [k, c] : coefs) terms.push_back({basis[k], c});
    Polynomial p(dim, terms);
    p.set_affine(center, unit);
    return p;
  };
  auto slack_of = [&](const Polynomial& p) {
    return cd_slack(s, ScalarField::polynomial("basis", p), x, nu, rho1, rho2, kappa);
  };
  std::vector<double> diag(n);
  for (int a = 0; a < n; ++a) diag[a] = slack_of(field_of({{a, 1.0}}));
  Eigen::MatrixXd M(n, n);
  for (int a = 0; a < n; ++a) {
    M(a, a) = diag[a];
    for (int b = a + 1; b < n; ++b) {
      const double both = slack_of(field_of({{a, 1.0}, {b, 1.0}}));
      M(a, b) = M(b, a) = 0.5 * (both - diag[a] - diag[b]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  SlackMinimum out;
  out.min_eigenvalue = es.eigenvalues()(0);
  std::vector<std::pair<int, double>> coefs;
  for (int a = 0; a < n; ++a) coefs.emplace_back(a, es.eigenvectors()(a, 0));
  out.witness = field_of(coefs);
  out.point = x;
  out.nu = nu;
  return out;
}

SlackMinimum adversarial_cd_search(const SubRiemannianStructure& s, std::span<const ChartPoint> pts, double nu_lo,
                                   double nu_hi, int nu_samples, const CDParameters& p, RandomStream& rng) {
  if (!(nu_lo > 0.0) || !(nu_hi >= nu_lo)) throw DomainError("adversarial_cd_search needs 0 < nu_lo <= nu_hi");
  SlackMinimum best;
  best.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const ChartPoint& x : pts)
    for (int k = 0; k < nu_samples; ++k) {
      const double nu = std::exp(rng.uniform(std::log(nu_lo), std::log(nu_hi)));
      SlackMinimum m = cd_slack_minimum(s, x, nu, p.rho1, p.rho2.value_or(0.0), p.kappa);
      if (m.min_eigenvalue < best.min_eigenvalue) best = std::move(m);
    }
  return best;
}

}  // namespace srg
