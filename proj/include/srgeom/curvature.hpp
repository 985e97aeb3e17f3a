#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "srgeom/calculus.hpp"
#include "srgeom/connection.hpp"
#include "srgeom/structure.hpp"

namespace srg {

enum class RicciRoute {
  /// R(X_i,X_k)X_l assembled from nabla and brackets; the tables are
  /// recovered from raw frame brackets.
  Definition,
  /// Expanded coefficient identity in Christoffel symbols and declared tables.
  Formula
};

enum class RRoute {
  /// Coefficients read off the first-order expression in omega, gamma, delta.
  Structural,
  /// Ric, nabla T and T of the canonical connection.
  Tensorial
};

/// Ric(X_k, X_l) as a d x d matrix (row k, column l).
Eigen::MatrixXd ricci(const SubRiemannianStructure& s, const ChartPoint& x, RicciRoute route);

/// The symmetric (d+v) x (d+v) matrix Q with R(f,f)(x) = w^T Q w, where
/// w = (X_1 f, ..., X_d f, Z_1 f, ..., Z_v f) over ordered pairs. The factor
/// two from summing over both orientations (m,n) and (n,m) is folded into Q
/// here and nowhere else.
Eigen::MatrixXd r_form(const SubRiemannianStructure& s, const ChartPoint& x, RRoute route);

/// J_p as a d x d matrix, (J_p)_{ij} = gamma^p_{ij}, so J_p V = sum_ij V_j gamma^p_ij X_i.
std::vector<Eigen::MatrixXd> j_operators(const SubRiemannianStructure& s, const ChartPoint& x);

/// T(f,f) = g^T t_form g with t_form = 2 sum_p J_p^T J_p.
Eigen::MatrixXd t_form(const SubRiemannianStructure& s, const ChartPoint& x);

struct CurvatureReport {
  Eigen::MatrixXd ricci;
  Eigen::MatrixXd r_structural;
  Eigen::MatrixXd r_tensorial;
  Eigen::MatrixXd t_form;
  std::vector<Eigen::MatrixXd> j_ops;
  ChartPoint point;

  double tensoriality_gap() const { return (r_structural - r_tensorial).cwiseAbs().maxCoeff(); }
};

CurvatureReport curvature_report(const SubRiemannianStructure& s, const ChartPoint& x);

/// R(f,f)(x) summed term by term over all (m, n), including m > n through
/// the antisymmetric extensions of gamma, delta and Z. An assembly path
/// independent of r_form.
double r_value(FieldDerivatives& fd);
double r_value(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x);

/// Gradient data (X_k f, Z_p f) stacked as in r_form.
Eigen::VectorXd gradient_data(FieldDerivatives& fd);

}  // namespace srg
