#include "srgeom/connection.hpp"

#include <algorithm>
#include <cmath>

namespace srg {

namespace {

// Solves A c = b column by column for jet-valued A (n x n, row-major) and a
// set of right-hand sides, with partial pivoting on the base-point values.
void solve_jets(std::vector<Jet> a, std::vector<std::vector<Jet>>& rhs, int n) {
  auto A = [&](int r, int c) -> Jet& { return a[r * n + c]; };
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A(r, col).value()) > std::abs(A(piv, col).value())) piv = r;
    if (std::abs(A(piv, col).value()) < 1e-300) throw StructuralError("frame is singular at the point");
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(A(col, c), A(piv, c));
      for (auto& b : rhs) std::swap(b[col], b[piv]);
    }
    const Jet inv = 1.0 / A(col, col);
    for (int r = col + 1; r < n; ++r) {
      const Jet factor = A(r, col) * inv;
      for (int c = col; c < n; ++c) A(r, c) -= factor * A(col, c);
      for (auto& b : rhs) b[r] -= factor * b[col];
    }
  }
  for (auto& b : rhs) {
    for (int r = n - 1; r >= 0; --r) {
      Jet acc = b[r];
      for (int c = r + 1; c < n; ++c) acc -= A(r, c) * b[c];
      b[r] = acc / A(r, r);
    }
  }
}

}  // namespace

double StructureJets::along(FrameLabel l, const Jet& g) const {
  double r = 0.0;
  for (int a = 0; a < values.dim; ++a) {
    const int k = g.layout().variable_index(a);
    r += values.field(l, a) * g.coefficient(k);
  }
  return r;
}

StructureJets declared_structure_jets(const SubRiemannianStructure& s, const ChartPoint& x) {
  s.check_point(x);
  const JetLayout& layout = JetLayout::get(s.dim(), 1);
  std::vector<Jet> coords;
  for (int a = 0; a < s.dim(); ++a) coords.push_back(Jet::variable(layout, a, x[a]));
  StructureJets out;
  s.evaluate(coords, out.jets);
  s.evaluate(x.coords(), out.values);
  return out;
}

StructureJets bracket_structure_jets(const SubRiemannianStructure& s, const ChartPoint& x) {
  s.check_point(x);
  const int d = s.d();
  const int v = s.v();
  const int dim = s.dim();
  LocalFrame frame(s, x.coords(), 2);
  auto label = [&](int f) { return f < d ? X(f) : Zv(f - d); };

  std::vector<std::vector<Jet>> fields;
  for (int f = 0; f < dim; ++f) fields.push_back(frame.field(label(f)));

  // E(a, f) = a-th component of frame field f, truncated to order 1
  std::vector<Jet> E(static_cast<std::size_t>(dim) * dim);
  for (int a = 0; a < dim; ++a)
    for (int f = 0; f < dim; ++f) E[a * dim + f] = fields[f][a].truncated(1);

  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<Jet>> rhs;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < dim; ++j) {
      if (j == i) continue;
      if (j < d && j < i) continue;
      pairs.emplace_back(i, j);
      rhs.push_back(frame.bracket(fields[i], fields[j]));
    }
  solve_jets(E, rhs, dim);

  StructureJets out;
  s.evaluate(x.coords(), out.values);
  const Jet zero = Jet(frame.layout(), 0.0).truncated(1);
  out.jets.reset(dim, d, v, zero);
  for (int a = 0; a < dim; ++a)
    for (int f = 0; f < dim; ++f) out.jets.field(label(f), a) = E[a * dim + f];
  // density is not a bracket quantity; take it from the source
  out.jets.density = frame.jets().density.truncated(1);
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [i, j] = pairs[q];
    const auto& c = rhs[q];
    if (j < d) {
      for (int l = 0; l < d; ++l) out.jets.set_omega(i, j, l, c[l]);
      for (int p = 0; p < v; ++p) out.jets.set_gamma(i, j, p, 0.5 * c[d + p]);
    } else {
      for (int l = 0; l < d; ++l) out.jets.dl(i, j - d, l) = c[l];
    }
  }
  auto copy_values = [](const std::vector<Jet>& from, std::vector<double>& to) {
    to.resize(from.size());
    for (std::size_t k = 0; k < from.size(); ++k) to[k] = from[k].value();
  };
  copy_values(out.jets.omega, out.values.omega);
  copy_values(out.jets.gamma, out.values.gamma);
  copy_values(out.jets.delta, out.values.delta);
  return out;
}

ChristoffelData christoffel(const StructureJets& t, const ChartPoint& x) {
  const int d = t.values.d;
  ChristoffelData c;
  c.d = d;
  c.point = x;
  c.gamma_h.assign(static_cast<std::size_t>(d) * d * d, 0.0);
  c.dgamma_h.assign(static_cast<std::size_t>(d) * d * d * d, 0.0);
  const auto& w = t.values;
  const auto& wj = t.jets;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        c.gamma_h[(i * d + j) * d + k] = 0.5 * (w.w(i, j, k) + w.w(k, i, j) - w.w(j, k, i));
        const Jet combo = 0.5 * (wj.w(i, j, k) + wj.w(k, i, j) - wj.w(j, k, i));
        for (int l = 0; l < d; ++l) c.dgamma_h[((l * d + i) * d + j) * d + k] = t.along(X(l), combo);
      }
  return c;
}

ChristoffelData christoffel(const SubRiemannianStructure& s, const ChartPoint& x) {
  return christoffel(declared_structure_jets(s, x), x);
}

VerticalConnection nabla_vertical_on_horizontal(const SubRiemannianStructure& s, const ChartPoint& x) {
  s.check_point(x);
  const FrameSample<double> fs = s.sample(x);
  VerticalConnection out;
  out.d = s.d();
  out.v = s.v();
  out.coef.assign(static_cast<std::size_t>(out.v) * out.d * out.d, 0.0);
  for (int p = 0; p < out.v; ++p)
    for (int i = 0; i < out.d; ++i)
      for (int l = 0; l < out.d; ++l) out.coef[(p * out.d + i) * out.d + l] = -fs.dl(i, p, l);
  return out;
}

TorsionValue torsion(const StructureJets& t, const ChristoffelData& c) {
  const int d = t.values.d;
  const int v = t.values.v;
  TorsionValue out;
  out.d = d;
  out.v = v;
  out.t.assign(static_cast<std::size_t>(d) * d * v, 0.0);
  out.nabla_t.assign(static_cast<std::size_t>(d) * d * d * v, 0.0);
  // T(X_l, X_k) = -sum_{m,n} gamma^{mn}_{lk} Z_mn = -2 sum_p gamma^p_{lk} Z_p
  for (int l = 0; l < d; ++l)
    for (int k = 0; k < d; ++k)
      for (int p = 0; p < v; ++p) out.t[(l * d + k) * v + p] = -2.0 * t.values.g(l, k, p);
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int p = 0; p < v; ++p) {
          double r = -2.0 * t.along(X(l), t.jets.g(i, j, p));
          for (int k = 0; k < d; ++k) r -= c.G(l, i, k) * out.T(k, j, p) + c.G(l, j, k) * out.T(i, k, p);
          out.nabla_t[((l * d + i) * d + j) * v + p] = r;
        }
  return out;
}

TorsionValue torsion(const SubRiemannianStructure& s, const ChartPoint& x) {
  const StructureJets t = declared_structure_jets(s, x);
  return torsion(t, christoffel(t, x));
}

double torsion_horizontal_residual(const SubRiemannianStructure& s, const ChartPoint& x) {
  const ChristoffelData c = christoffel(s, x);
  const StructureJets raw = bracket_structure_jets(s, x);
  const int d = s.d();
  double worst = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        worst = std::max(worst, std::abs(c.G(i, j, k) - c.G(j, i, k) - raw.values.w(i, j, k)));
  return worst;
}

double koszul_residual(const SubRiemannianStructure& s, const ChartPoint& x) {
  const ChristoffelData c = christoffel(s, x);
  const FrameSample<double> fs = s.sample(x);
  const int d = s.d();
  double worst = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        worst = std::max(worst, std::abs(2.0 * c.G(i, j, k) - (fs.w(i, j, k) - fs.w(j, k, i) + fs.w(k, i, j))));
  return worst;
}

double metric_compatibility_residual(const ChristoffelData& c) {
  double worst = 0.0;
  for (int i = 0; i < c.d; ++i)
    for (int j = 0; j < c.d; ++j)
      for (int k = 0; k < c.d; ++k) worst = std::max(worst, std::abs(c.G(i, j, k) + c.G(i, k, j)));
  return worst;
}

}  // namespace srg
