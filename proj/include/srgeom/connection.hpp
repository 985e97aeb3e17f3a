#pragma once

#include <vector>

#include "srgeom/structure.hpp"

namespace srg {

/// Structure functions near a point as order-1 jets, together with the frame
/// values there. First derivatives of the tables along frame fields at the
/// point are all that connection and curvature need.
struct StructureJets {
  FrameSample<Jet> jets;
  FrameSample<double> values;

  /// (L g)(x) for the frame field L and a jet g of order >= 1.
  double along(FrameLabel l, const Jet& g) const;
};

/// Jets of the declared tables.
StructureJets declared_structure_jets(const SubRiemannianStructure& s, const ChartPoint& x);

/// Tables recovered from the frame alone: brackets of order-2 frame jets are
/// expanded in the frame basis by Gaussian elimination over jets. Does not
/// read the declared omega, gamma or delta.
StructureJets bracket_structure_jets(const SubRiemannianStructure& s, const ChartPoint& x);

struct ChristoffelData {
  int d = 0;
  /// gamma_h[(i*d + j)*d + k] = Gamma^k_{ij}, with nabla_{X_i} X_j = sum_k Gamma^k_{ij} X_k.
  std::vector<double> gamma_h;
  /// dgamma_h[((l*d + i)*d + j)*d + k] = X_l Gamma^k_{ij}.
  std::vector<double> dgamma_h;
  ChartPoint point;

  double G(int i, int j, int k) const { return gamma_h[(i * d + j) * d + k]; }
  double dG(int l, int i, int j, int k) const { return dgamma_h[((l * d + i) * d + j) * d + k]; }
};

ChristoffelData christoffel(const SubRiemannianStructure& s, const ChartPoint& x);
ChristoffelData christoffel(const StructureJets& t, const ChartPoint& x);

/// Coefficients of nabla_{Z_p} X_i = sum_l c(p, i, l) X_l, c = -delta^l_{ip}.
struct VerticalConnection {
  int d = 0;
  int v = 0;
  std::vector<double> coef;
  double operator()(int p, int i, int l) const { return coef[(p * d + i) * d + l]; }
};

VerticalConnection nabla_vertical_on_horizontal(const SubRiemannianStructure& s, const ChartPoint& x);

struct TorsionValue {
  int d = 0;
  int v = 0;
  /// Components on the ordered-pair vertical basis.
  std::vector<double> t;        // [(l*d + k)*v + p]
  std::vector<double> nabla_t;  // [((l*d + i)*d + j)*v + p]

  double T(int l, int k, int p) const { return t[(l * d + k) * v + p]; }
  double dT(int l, int i, int j, int p) const { return nabla_t[((l * d + i) * d + j) * v + p]; }
};

TorsionValue torsion(const SubRiemannianStructure& s, const ChartPoint& x);
TorsionValue torsion(const StructureJets& t, const ChristoffelData& c);

/// Largest |horizontal part| of nabla_{X_i} X_j - nabla_{X_j} X_i - [X_i, X_j],
/// with the bracket taken from raw frame jets.
double torsion_horizontal_residual(const SubRiemannianStructure& s, const ChartPoint& x);

/// max |2 Gamma^k_ij - (omega^k_ij - omega^i_jk + omega^j_ki)|.
double koszul_residual(const SubRiemannianStructure& s, const ChartPoint& x);
/// max |Gamma^k_ij + Gamma^j_ik|.
double metric_compatibility_residual(const ChristoffelData& c);

}  // namespace srg
