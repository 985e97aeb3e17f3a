#pragma once

#include <string>
#include <vector>

#include "srgeom/calculus.hpp"
#include "srgeom/cdconstants.hpp"
#include "srgeom/polynomial.hpp"

namespace srg {

class RandomStream;

struct BochnerResidual {
  double horizontal = 0.0;
  double vertical = 0.0;
  ChartPoint point;
  std::string field_id;
};

/// Gamma_2(f,f) minus the Hessian, torsion-coupling and R(f,f) terms.
double horizontal_bochner_residual(FieldDerivatives& fd);
double horizontal_bochner_residual(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x);

/// Gamma_2^Z(f,f) - sum_{m,n} Gamma(Z_mn f, Z_mn f).
double vertical_bochner_residual(FieldDerivatives& fd);
double vertical_bochner_residual(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x);

BochnerResidual bochner_residuals(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x);

/// Gamma_2 + nu Gamma_2^Z - (1/d)(Lf)^2 - (rho1 - kappa/nu) Gamma - rho2 Gamma^Z.
double cd_slack(const FormValue& fv, int d, double nu, double rho1, double rho2, double kappa);
double cd_slack(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x, double nu, double rho1,
                double rho2, double kappa);
double cd_slack(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x, double nu,
                const CDParameters& p);

/// The slack is a quadratic form in the third-order jet of f at x. Its
/// smallest eigenvalue over unit coefficient vectors, with the minimizing
/// polynomial.
struct SlackMinimum {
  double min_eigenvalue = 0.0;
  Polynomial witness;
  ChartPoint point;
  double nu = 0.0;
};

SlackMinimum cd_slack_minimum(const SubRiemannianStructure& s, const ChartPoint& x, double nu, double rho1,
                              double rho2, double kappa);

/// Randomized search over points of the box and nu in [nu_lo, nu_hi]
/// (log-uniform) for the most negative slack eigenvalue.
SlackMinimum adversarial_cd_search(const SubRiemannianStructure& s, std::span<const ChartPoint> pts, double nu_lo,
                                   double nu_hi, int nu_samples, const CDParameters& p, RandomStream& rng);

}  // namespace srg
