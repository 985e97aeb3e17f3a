#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "srgeom/errors.hpp"
#include "srgeom/jet.hpp"

namespace srg {

/// A point of the chart. Coordinates must be finite; the owning structure
/// checks the length.
class ChartPoint {
 public:
  ChartPoint() = default;
  explicit ChartPoint(std::vector<double> coords);
  ChartPoint(std::initializer_list<double> coords) : ChartPoint(std::vector<double>(coords)) {}

  std::size_t size() const { return coords_.size(); }
  double operator[](std::size_t a) const { return coords_[a]; }
  std::span<const double> coords() const { return coords_; }
  const std::vector<double>& vector() const { return coords_; }

 private:
  std::vector<double> coords_;
};

/// Canonical lexicographic ordering (1,2),(1,3),...,(h-1,h) of the vertical
/// labels. Pairs are 1-based as in the math; flat indices are 0-based.
class VerticalIndexing {
 public:
  explicit VerticalIndexing(int h);

  int h() const { return h_; }
  int count() const { return h_ * (h_ - 1) / 2; }
  /// (flat index, sign) with sign -1 when m > n, encoding Z_nm = -Z_mn.
  std::pair<int, int> flatten(int m, int n) const;
  /// The ordered pair (m, n), m < n, of flat index p.
  std::pair<int, int> unflatten(int p) const;

 private:
  int h_;
};

/// A derivative direction: horizontal X_i or vertical Z_p (p a flat index).
struct FrameLabel {
  bool vertical = false;
  int index = 0;

  friend bool operator==(const FrameLabel&, const FrameLabel&) = default;
  friend auto operator<=>(const FrameLabel&, const FrameLabel&) = default;
};

inline FrameLabel X(int i) { return {false, i}; }
inline FrameLabel Zv(int p) { return {true, p}; }

using FrameWord = std::vector<FrameLabel>;

/// Frame coefficients, structure functions and density sampled at a point,
/// either as plain values or as Taylor jets.
///
/// Storage conventions (all indices 0-based):
///   horizontal[i*dim + a]  = a-th chart component of X_i
///   vertical[p*dim + a]    = a-th chart component of Z_p
///   omega[(i*d + j)*d + l] = omega^l_{ij}
///   gamma[(i*d + j)*v + p] = gamma^{p}_{ij} for the ordered pair p
///   delta[(i*v + p)*d + l] = delta^l_{ip}
template <class T>
struct FrameSample {
  int dim = 0;
  int d = 0;
  int v = 0;
  std::vector<T> horizontal;
  std::vector<T> vertical;
  std::vector<T> omega;
  std::vector<T> gamma;
  std::vector<T> delta;
  T density{};

  void reset(int dim_, int d_, int v_, const T& zero) {
    dim = dim_;
    d = d_;
    v = v_;
    horizontal.assign(static_cast<std::size_t>(d) * dim, zero);
    vertical.assign(static_cast<std::size_t>(v) * dim, zero);
    omega.assign(static_cast<std::size_t>(d) * d * d, zero);
    gamma.assign(static_cast<std::size_t>(d) * d * v, zero);
    delta.assign(static_cast<std::size_t>(d) * v * d, zero);
    density = zero;
  }

  T& X(int i, int a) { return horizontal[i * dim + a]; }
  const T& X(int i, int a) const { return horizontal[i * dim + a]; }
  T& Z(int p, int a) { return vertical[p * dim + a]; }
  const T& Z(int p, int a) const { return vertical[p * dim + a]; }
  T& field(FrameLabel l, int a) { return l.vertical ? Z(l.index, a) : X(l.index, a); }
  const T& field(FrameLabel l, int a) const { return l.vertical ? Z(l.index, a) : X(l.index, a); }
  T& w(int i, int j, int l) { return omega[(i * d + j) * d + l]; }
  const T& w(int i, int j, int l) const { return omega[(i * d + j) * d + l]; }
  T& g(int i, int j, int p) { return gamma[(i * d + j) * v + p]; }
  const T& g(int i, int j, int p) const { return gamma[(i * d + j) * v + p]; }
  T& dl(int i, int p, int l) { return delta[(i * v + p) * d + l]; }
  const T& dl(int i, int p, int l) const { return delta[(i * v + p) * d + l]; }

  /// Sets omega^l_{ij} and its mirror omega^l_{ji}.
  void set_omega(int i, int j, int l, const T& value) {
    w(i, j, l) = value;
    w(j, i, l) = -value;
  }
  /// Sets gamma^p_{ij} and its mirror gamma^p_{ji}.
  void set_gamma(int i, int j, int p, const T& value) {
    g(i, j, p) = value;
    g(j, i, p) = -value;
  }
};

/// Evaluates frame, structure functions and density. Implementations must be
/// pure and thread-safe.
class StructureSource {
 public:
  virtual ~StructureSource() = default;
  virtual void evaluate(std::span<const double> x, FrameSample<double>& out) const = 0;
  virtual void evaluate(std::span<const Jet> x, FrameSample<Jet>& out) const = 0;
};

/// Adapts a type with a member template
///   template <class T> void fill(std::span<const T> x, FrameSample<T>& out) const
/// into a StructureSource; `out` arrives zeroed and correctly sized.
template <class Impl>
class ClosedFormSource final : public StructureSource {
 public:
  ClosedFormSource(Impl impl, int dim, int d, int v) : impl_(std::move(impl)), dim_(dim), d_(d), v_(v) {}

  void evaluate(std::span<const double> x, FrameSample<double>& out) const override {
    out.reset(dim_, d_, v_, 0.0);
    impl_.fill(x, out);
  }
  void evaluate(std::span<const Jet> x, FrameSample<Jet>& out) const override {
    out.reset(dim_, d_, v_, constant_like(x[0], 0.0));
    impl_.fill(x, out);
  }

 private:
  Impl impl_;
  int dim_, d_, v_;
};

/// Coordinate bounds of the chart. Periodic axes are wrapped into
/// [lower, lower + period); other axes bound the admissible region.
struct ChartAxis {
  double lower = -1e300;
  double upper = 1e300;
  double period = 0.0;
};

class Chart {
 public:
  Chart() = default;
  explicit Chart(std::vector<ChartAxis> axes) : axes_(std::move(axes)) {}
  static Chart unbounded(int dim) { return Chart(std::vector<ChartAxis>(dim)); }

  const std::vector<ChartAxis>& axes() const { return axes_; }
  bool contains(std::span<const double> x) const;
  void wrap(std::span<double> x) const;
  /// y_a - x_a, reduced to (-period/2, period/2] on periodic axes.
  double difference(int a, double x, double y) const;

 private:
  std::vector<ChartAxis> axes_;
};

/// Group structure of a Lie-group model in its chart. `horizontal_step`
/// replaces g by g*exp(sum_i w_i X_i) exactly.
struct GroupLaw {
  std::function<void(std::span<const double>, std::span<const double>, std::span<double>)> multiply;
  std::function<void(std::span<const double>, std::span<double>)> inverse;
  std::vector<double> identity;
  std::function<void(std::span<double>, std::span<const double>)> horizontal_step;
};

class SubRiemannianStructure {
 public:
  SubRiemannianStructure(std::string name, int d, int h, int dim, std::shared_ptr<const StructureSource> source,
                         Chart chart);

  const std::string& name() const { return name_; }
  int d() const { return d_; }
  int h() const { return h_; }
  /// Number of vertical fields, h(h-1)/2.
  int v() const { return indexing_.count(); }
  int dim() const { return dim_; }
  const VerticalIndexing& vertical_indexing() const { return indexing_; }
  const Chart& chart() const { return chart_; }
  const StructureSource& source() const { return *source_; }
  std::shared_ptr<const StructureSource> source_ptr() const { return source_; }

  void evaluate(std::span<const double> x, FrameSample<double>& out) const;
  void evaluate(std::span<const Jet> x, FrameSample<Jet>& out) const;
  FrameSample<double> sample(const ChartPoint& x) const;

  /// Throws StructuralError when the point does not belong to this chart.
  void check_point(const ChartPoint& x) const;

  const std::optional<GroupLaw>& group() const { return group_; }
  void set_group(GroupLaw g) { group_ = std::move(g); }
  /// In exponential coordinates of a graded group the first d coordinates
  /// form the horizontal layer, and projecting onto them is 1-Lipschitz.
  bool graded_chart() const { return graded_chart_; }
  void set_graded_chart(bool b) { graded_chart_ = b; }
  /// Structure with the same frame and chart but a different source (used to
  /// inject perturbed tables).
  SubRiemannianStructure with_source(std::shared_ptr<const StructureSource> source) const;

 private:
  std::string name_;
  int d_;
  int h_;
  int dim_;
  VerticalIndexing indexing_;
  std::shared_ptr<const StructureSource> source_;
  Chart chart_;
  std::optional<GroupLaw> group_;
  bool graded_chart_ = false;
};

std::pair<int, int> vertical_flatten(const SubRiemannianStructure& s, int m, int n);

/// Frame data expanded in Taylor jets of a given order around a point, with
/// helpers for differentiating along frame fields.
class LocalFrame {
 public:
  LocalFrame(const SubRiemannianStructure& s, std::span<const double> x, int order);

  const JetLayout& layout() const { return *layout_; }
  const FrameSample<Jet>& jets() const { return jets_; }
  const FrameSample<double>& values() const { return values_; }
  /// Chart coordinates as jets (x_a + t_a).
  const std::vector<Jet>& coordinates() const { return coords_; }
  /// The jet of L g where L is the frame field `label`: sum_a L^a d_a g.
  Jet apply(FrameLabel label, const Jet& g) const;
  /// Vector-field bracket [A, B] of two coefficient vectors given as jets.
  std::vector<Jet> bracket(std::span<const Jet> a, std::span<const Jet> b) const;
  std::vector<Jet> field(FrameLabel label) const;

 private:
  const JetLayout* layout_;
  std::vector<Jet> coords_;
  FrameSample<Jet> jets_;
  FrameSample<double> values_;
};

enum class Backend { Exact, FiniteDifference };

struct PointValidation {
  ChartPoint point;
  double bracket_residual = 0.0;
  double vertical_bracket_residual = 0.0;
  double delta_skew_residual = 0.0;
  double omega_skew_residual = 0.0;
  double gamma_skew_residual = 0.0;
  /// Smallest singular value of [X_i, [X_j, X_k]] divided by the largest.
  double span_condition = 0.0;
  bool pass = false;
};

struct ValidationReport {
  double tol = 0.0;
  Backend backend = Backend::Exact;
  std::vector<PointValidation> points;
  double max_residual = 0.0;
  bool pass = false;
};

/// Checks the bracket relations, the skew conditions and the step-two span at
/// each point. Brackets come from jets (exact) or from central differences of
/// the frame coefficients (independent oracle).
ValidationReport validate_structure(const SubRiemannianStructure& s, std::span<const ChartPoint> pts, double tol,
                                    Backend backend = Backend::Exact);

}  // namespace srg
