#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srgeom/polynomial.hpp"
#include "srgeom/structure.hpp"

namespace srg {

/// Longest supported derivative word.
constexpr int kMaxWordLength = 4;

/// A smooth function on the chart together with the derivative mechanism used
/// for frame words: Taylor jets (exact up to rounding) or nested central
/// differences.
class ScalarField {
 public:
  using DoubleFn = std::function<double(std::span<const double>)>;
  using JetFn = std::function<Jet(std::span<const Jet>)>;

  ScalarField() = default;

  /// `f` must be callable as f(std::span<const T>) for T = double and T = Jet.
  template <class F>
  static ScalarField closed_form(std::string id, F f, Backend backend = Backend::Exact) {
    ScalarField s;
    s.id_ = std::move(id);
    s.backend_ = backend;
    auto shared = std::make_shared<F>(std::move(f));
    s.value_ = [shared](std::span<const double> x) { return (*shared)(x); };
    s.jet_ = [shared](std::span<const Jet> x) { return (*shared)(x); };
    return s;
  }
  static ScalarField polynomial(std::string id, Polynomial p, Backend backend = Backend::Exact);

  double operator()(std::span<const double> x) const { return value_(x); }
  Jet operator()(std::span<const Jet> x) const { return jet_(x); }
  Backend backend() const { return backend_; }
  ScalarField with_backend(Backend b) const;
  const std::string& id() const { return id_; }
  const std::optional<Polynomial>& as_polynomial() const { return poly_; }

 private:
  std::string id_;
  Backend backend_ = Backend::Exact;
  DoubleFn value_;
  JetFn jet_;
  std::optional<Polynomial> poly_;
};

/// Step used by the finite-difference backend for a word of the given length
/// (same step at every nesting level).
double fd_step(int word_length);

/// Frame-word derivatives of one field at one point, memoized. Also exposes
/// the structure functions at the point and their first derivatives along
/// frame fields. Not shared between threads.
class FieldDerivatives {
 public:
  FieldDerivatives(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x,
                   int max_order = 3);

  const SubRiemannianStructure& structure() const { return *s_; }
  const ScalarField& field() const { return *f_; }
  const ChartPoint& point() const { return x_; }
  const LocalFrame& frame() const { return frame_; }
  const FrameSample<double>& tables() const { return frame_.values(); }

  /// w = (L1, ..., Lk) gives L1(L2(...(Lk f))).
  double word(const FrameWord& w);
  double Xf(int i) { return word({X(i)}); }
  double Zf(int p) { return word({Zv(p)}); }
  double XXf(int i, int j) { return word({X(i), X(j)}); }

  /// Derivative along `label` of omega^l_{ij}, gamma^p_{ij} or delta^l_{ip}.
  double d_omega(FrameLabel label, int i, int j, int l);
  double d_gamma(FrameLabel label, int i, int j, int p);
  double d_delta(FrameLabel label, int i, int p, int l);
  /// c_a = sum_k omega^k_{ak}, so that X0 = -sum_a c_a X_a.
  double drift_coefficient(int a) const;
  double d_drift_coefficient(FrameLabel label, int a);

 private:
  const Jet& jet_word(const FrameWord& w);
  double fd_word(std::span<const FrameLabel> w, std::vector<double>& y, double h);

  const SubRiemannianStructure* s_;
  const ScalarField* f_;
  ChartPoint x_;
  int max_order_;
  LocalFrame frame_;
  std::map<FrameWord, double> values_;
  std::map<FrameWord, Jet> jets_;
  FrameSample<double> scratch_;
};

struct FormValue {
  double gamma = 0.0;
  double gammaZ = 0.0;
  double gamma2 = 0.0;
  double gamma2Z = 0.0;
  double lf = 0.0;
  ChartPoint point;
};

double apply_frame_word(const SubRiemannianStructure& s, const FrameWord& word, const ScalarField& f,
                        const ChartPoint& x);

double sublaplacian(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x);
double sublaplacian(FieldDerivatives& fd);
/// L(A f) for a frame field A, from order-3 words.
double sublaplacian_of_derivative(FieldDerivatives& fd, FrameLabel inner);
/// A(L f) for a frame field A, from order-3 words and A applied to omega.
double derivative_of_sublaplacian(FieldDerivatives& fd, FrameLabel outer);

/// Gamma(f, g) = sum_i X_i f X_i g.
double carre_du_champ(const SubRiemannianStructure& s, const ScalarField& f, const ScalarField& g,
                      const ChartPoint& x);

FormValue forms(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x);
FormValue forms(FieldDerivatives& fd);

/// f_{,ij} = (X_i X_j f + X_j X_i f) / 2.
Eigen::MatrixXd sym_hessian(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x);
Eigen::MatrixXd sym_hessian(FieldDerivatives& fd);

/// [L, Z_p] f expanded through the declared delta table:
///   sum_i (X_i [X_i,Z_p] + [X_i,Z_p] X_i) f + [X0, Z_p] f,  [X_i,Z_p] = sum_l delta^l_ip X_l.
/// One entry per ordered pair p.
std::vector<double> commutator_LZ_residual(const SubRiemannianStructure& s, const ScalarField& f,
                                           const ChartPoint& x);
/// L(Z_p f) - Z_p(L f) straight from frame words; only omega enters, via X0.
std::vector<double> commutator_LZ_direct(const SubRiemannianStructure& s, const ScalarField& f,
                                         const ChartPoint& x);

}  // namespace srg
