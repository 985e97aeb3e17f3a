#include "srgeom/structure.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace srg {

namespace {

std::string describe(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (std::size_t a = 0; a < x.size(); ++a) os << (a ? ", " : "") << x[a];
  os << ")";
  return os.str();
}

// d/dx_b of every frame coefficient, by Richardson-extrapolated central
// differences of the plain-double evaluation. Result indexed [label][a][b].
std::vector<std::vector<std::vector<double>>> fd_frame_jacobian(const SubRiemannianStructure& s,
                                                                std::span<const double> x) {
  const int dim = s.dim();
  const int nf = s.d() + s.v();
  std::vector<std::vector<std::vector<double>>> jac(nf, std::vector<std::vector<double>>(dim, std::vector<double>(dim)));
  FrameSample<double> plus, minus;
  std::vector<double> y(x.begin(), x.end());
  auto central = [&](int b, double h, std::vector<double>& out) {
    y[b] = x[b] + h;
    s.evaluate(y, plus);
    y[b] = x[b] - h;
    s.evaluate(y, minus);
    y[b] = x[b];
    out.resize(static_cast<std::size_t>(nf) * dim);
    for (int f = 0; f < nf; ++f) {
      FrameLabel l = f < s.d() ? X(f) : Zv(f - s.d());
      for (int a = 0; a < dim; ++a) out[f * dim + a] = (plus.field(l, a) - minus.field(l, a)) / (2.0 * h);
    }
  };
  std::vector<double> coarse, fine;
  for (int b = 0; b < dim; ++b) {
    const double h = 1e-3 * std::max(1.0, std::abs(x[b]));
    central(b, h, coarse);
    central(b, 0.5 * h, fine);
    for (int f = 0; f < nf; ++f)
      for (int a = 0; a < dim; ++a) jac[f][a][b] = (4.0 * fine[f * dim + a] - coarse[f * dim + a]) / 3.0;
  }
  return jac;
}

}  // namespace

ChartPoint::ChartPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  for (double c : coords_)
    if (!std::isfinite(c)) throw DomainError("chart point has a non-finite coordinate");
}

VerticalIndexing::VerticalIndexing(int h) : h_(h) {
  if (h < 1) throw StructuralError("vertical label count h must be positive");
}

std::pair<int, int> VerticalIndexing::flatten(int m, int n) const {
  if (m < 1 || n < 1 || m > h_ || n > h_) throw InvalidIndexError("vertical label out of range");
  if (m == n) throw InvalidIndexError("vertical pair needs distinct labels");
  int sign = 1;
  if (m > n) {
    std::swap(m, n);
    sign = -1;
  }
  // pairs (1,2..h), (2,3..h), ... ; offset of row m is sum_{k<m} (h - k)
  int offset = (m - 1) * h_ - (m - 1) * m / 2;
  return {offset + (n - m - 1), sign};
}

std::pair<int, int> VerticalIndexing::unflatten(int p) const {
  if (p < 0 || p >= count()) throw InvalidIndexError("flat vertical index out of range");
  int m = 1;
  while (p >= h_ - m) {
    p -= h_ - m;
    ++m;
  }
  return {m, m + 1 + p};
}

bool Chart::contains(std::span<const double> x) const {
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (!std::isfinite(x[a])) return false;
    if (axes_[a].period > 0.0) continue;
    if (x[a] < axes_[a].lower || x[a] > axes_[a].upper) return false;
  }
  return true;
}

void Chart::wrap(std::span<double> x) const {
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const auto& ax = axes_[a];
    if (ax.period > 0.0) {
      double r = std::fmod(x[a] - ax.lower, ax.period);
      if (r < 0.0) r += ax.period;
      x[a] = ax.lower + r;
    }
  }
}

double Chart::difference(int a, double x, double y) const {
  double dlt = y - x;
  const double period = axes_[a].period;
  if (period > 0.0) {
    dlt = std::remainder(dlt, period);
  }
  return dlt;
}

SubRiemannianStructure::SubRiemannianStructure(std::string name, int d, int h, int dim,
                                               std::shared_ptr<const StructureSource> source, Chart chart)
    : name_(std::move(name)), d_(d), h_(h), dim_(dim), indexing_(h), source_(std::move(source)),
      chart_(std::move(chart)) {
  if (d < 1) throw StructuralError("horizontal rank d must be positive");
  if (dim != d + indexing_.count())
    throw StructuralError("chart dimension " + std::to_string(dim) + " differs from d + h(h-1)/2 = " +
                          std::to_string(d + indexing_.count()));
  if (!source_) throw StructuralError("structure has no evaluator");
  if (chart_.axes().empty()) chart_ = Chart::unbounded(dim);
  if (static_cast<int>(chart_.axes().size()) != dim) throw StructuralError("chart axes do not match dimension");
}

void SubRiemannianStructure::evaluate(std::span<const double> x, FrameSample<double>& out) const {
  if (static_cast<int>(x.size()) != dim_) throw StructuralError("point dimension differs from chart dimension");
  source_->evaluate(x, out);
}

void SubRiemannianStructure::evaluate(std::span<const Jet> x, FrameSample<Jet>& out) const {
  if (static_cast<int>(x.size()) != dim_) throw StructuralError("point dimension differs from chart dimension");
  source_->evaluate(x, out);
}

FrameSample<double> SubRiemannianStructure::sample(const ChartPoint& x) const {
  FrameSample<double> out;
  evaluate(x.coords(), out);
  return out;
}

void SubRiemannianStructure::check_point(const ChartPoint& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw StructuralError("point " + describe(x.coords()) + " has " + std::to_string(x.size()) +
                          " coordinates, chart dimension is " + std::to_string(dim_));
  if (!chart_.contains(x.coords())) throw StructuralError("point " + describe(x.coords()) + " lies outside the chart");
}

SubRiemannianStructure SubRiemannianStructure::with_source(std::shared_ptr<const StructureSource> source) const {
  SubRiemannianStructure s = *this;
  s.source_ = std::move(source);
  return s;
}

std::pair<int, int> vertical_flatten(const SubRiemannianStructure& s, int m, int n) {
  return s.vertical_indexing().flatten(m, n);
}

LocalFrame::LocalFrame(const SubRiemannianStructure& s, std::span<const double> x, int order)
    : layout_(&JetLayout::get(s.dim(), order)) {
  coords_.reserve(x.size());
  for (int a = 0; a < s.dim(); ++a) coords_.push_back(Jet::variable(*layout_, a, x[a]));
  s.evaluate(coords_, jets_);
  s.evaluate(x, values_);
}

Jet LocalFrame::apply(FrameLabel label, const Jet& g) const {
  if (g.valid_order() < 1) throw UnsupportedOrderError("jet order exhausted while applying a frame field");
  Jet acc(*layout_, 0.0);
  acc = acc.truncated(g.valid_order() - 1);
  for (int a = 0; a < jets_.dim; ++a) acc.add_product(jets_.field(label, a), g.partial(a));
  return acc;
}

std::vector<Jet> LocalFrame::field(FrameLabel label) const {
  std::vector<Jet> out;
  for (int a = 0; a < jets_.dim; ++a) out.push_back(jets_.field(label, a));
  return out;
}

std::vector<Jet> LocalFrame::bracket(std::span<const Jet> a, std::span<const Jet> b) const {
  const int dim = jets_.dim;
  std::vector<Jet> out;
  out.reserve(dim);
  for (int c = 0; c < dim; ++c) {
    int order = std::min(a[0].valid_order(), b[0].valid_order()) - 1;
    Jet acc = Jet(*layout_, 0.0).truncated(std::max(order, 0));
    for (int k = 0; k < dim; ++k) {
      acc.add_product(a[k], b[c].partial(k));
      acc -= a[c].partial(k) * b[k];
    }
    out.push_back(std::move(acc));
  }
  return out;
}

ValidationReport validate_structure(const SubRiemannianStructure& s, std::span<const ChartPoint> pts, double tol,
                                    Backend backend) {
  if (pts.empty()) throw DomainError("validate_structure needs at least one point");
  if (!(tol > 0.0)) throw DomainError("validate_structure needs tol > 0");
  const int d = s.d();
  const int v = s.v();
  const int dim = s.dim();
  ValidationReport report;
  report.tol = tol;
  report.backend = backend;
  report.pass = true;

  for (const ChartPoint& x : pts) {
    s.check_point(x);
    PointValidation pv;
    pv.point = x;
    FrameSample<double> fs;
    s.evaluate(x.coords(), fs);

    // brackets of every pair of frame fields as value-level chart vectors
    const int nf = d + v;
    auto label = [&](int f) { return f < d ? X(f) : Zv(f - d); };
    std::vector<std::vector<std::vector<double>>> br(nf, std::vector<std::vector<double>>(nf));
    if (backend == Backend::Exact) {
      LocalFrame lf(s, x.coords(), 1);
      std::vector<std::vector<Jet>> fields;
      for (int f = 0; f < nf; ++f) fields.push_back(lf.field(label(f)));
      for (int f = 0; f < nf; ++f)
        for (int g = 0; g < nf; ++g) {
          auto b = lf.bracket(fields[f], fields[g]);
          for (const Jet& c : b) br[f][g].push_back(c.value());
        }
    } else {
      auto jac = fd_frame_jacobian(s, x.coords());
      for (int f = 0; f < nf; ++f)
        for (int g = 0; g < nf; ++g) {
          br[f][g].assign(dim, 0.0);
          for (int c = 0; c < dim; ++c)
            for (int k = 0; k < dim; ++k)
              br[f][g][c] += fs.field(label(f), k) * jac[g][c][k] - fs.field(label(g), k) * jac[f][c][k];
        }
    }

    // frame independence
    Eigen::MatrixXd E(dim, nf);
    for (int f = 0; f < nf; ++f)
      for (int a = 0; a < dim; ++a) E(a, f) = fs.field(label(f), a);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_e(E);
    const auto& se = svd_e.singularValues();
    if (se(se.size() - 1) <= 1e-12 * std::max(1.0, se(0)))
      throw StructuralError("frame vectors are linearly dependent at point " + describe(x.coords()));

    // (a) [X_i, X_j] - sum omega^l_ij X_l - 2 sum_p gamma^p_ij Z_p
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        for (int a = 0; a < dim; ++a) {
          double r = br[i][j][a];
          for (int l = 0; l < d; ++l) r -= fs.w(i, j, l) * fs.X(l, a);
          for (int p = 0; p < v; ++p) r -= 2.0 * fs.g(i, j, p) * fs.Z(p, a);
          pv.bracket_residual = std::max(pv.bracket_residual, std::abs(r));
        }
      }
    // (b) [X_i, Z_p] - sum delta^l_ip X_l
    for (int i = 0; i < d; ++i)
      for (int p = 0; p < v; ++p)
        for (int a = 0; a < dim; ++a) {
          double r = br[i][d + p][a];
          for (int l = 0; l < d; ++l) r -= fs.dl(i, p, l) * fs.X(l, a);
          pv.vertical_bracket_residual = std::max(pv.vertical_bracket_residual, std::abs(r));
        }
    // (c) skew conditions
    for (int i = 0; i < d; ++i)
      for (int l = 0; l < d; ++l)
        for (int p = 0; p < v; ++p)
          pv.delta_skew_residual = std::max(pv.delta_skew_residual, std::abs(fs.dl(i, p, l) + fs.dl(l, p, i)));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        for (int l = 0; l < d; ++l)
          pv.omega_skew_residual = std::max(pv.omega_skew_residual, std::abs(fs.w(i, j, l) + fs.w(j, i, l)));
        for (int p = 0; p < v; ++p)
          pv.gamma_skew_residual = std::max(pv.gamma_skew_residual, std::abs(fs.g(i, j, p) + fs.g(j, i, p)));
      }
    // (d) span of X_i and [X_j, X_k]
    const int ncol = d + d * (d - 1) / 2;
    Eigen::MatrixXd S(dim, ncol);
    int col = 0;
    for (int i = 0; i < d; ++i, ++col)
      for (int a = 0; a < dim; ++a) S(a, col) = fs.X(i, a);
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k, ++col)
        for (int a = 0; a < dim; ++a) S(a, col) = br[j][k][a];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    const auto& sv = svd.singularValues();
    const bool full = sv.size() >= dim && sv(dim - 1) > 1e-10 * std::max(1.0, sv(0));
    if (!full)
      throw HormanderError("X_i and [X_j, X_k] do not span the tangent space at point " + describe(x.coords()));
    pv.span_condition = sv(dim - 1) / sv(0);

    const double worst = std::max({pv.bracket_residual, pv.vertical_bracket_residual, pv.delta_skew_residual,
                                   pv.omega_skew_residual, pv.gamma_skew_residual});
    pv.pass = worst <= tol;
    report.max_residual = std::max(report.max_residual, worst);
    report.pass = report.pass && pv.pass;
    report.points.push_back(std::move(pv));
  }
  return report;
}

}  // namespace srg
