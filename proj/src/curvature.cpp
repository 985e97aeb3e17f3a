#include "srgeom/curvature.hpp"

namespace srg {

namespace {

Eigen::MatrixXd ricci_definition(const StructureJets& t, const ChristoffelData& c) {
  const int d = t.values.d;
  const int v = t.values.v;
  const auto& tab = t.values;
  Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd r(d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i) {
        // R(X_i, X_k) X_l in the horizontal frame
        r.setZero();
        for (int j = 0; j < d; ++j) {
          r(j) += c.dG(i, k, l, j) - c.dG(k, i, l, j);
          for (int m = 0; m < d; ++m) {
            r(m) += c.G(k, l, j) * c.G(i, j, m) - c.G(i, l, j) * c.G(k, j, m);
            r(m) -= tab.w(i, k, j) * c.G(j, l, m);
          }
        }
        for (int p = 0; p < v; ++p)
          for (int m = 0; m < d; ++m) r(m) += 2.0 * tab.g(i, k, p) * tab.dl(l, p, m);
        ric(k, l) += r(i);
      }
  return ric;
}

Eigen::MatrixXd ricci_formula(const StructureJets& t, const ChristoffelData& c) {
  const int d = t.values.d;
  const int v = t.values.v;
  const auto& tab = t.values;
  Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      double r = 0.0;
      for (int j = 0; j < d; ++j) {
        for (int p = 0; p < v; ++p) r += 2.0 * tab.g(k, j, p) * tab.dl(j, p, l);
        r += c.dG(j, k, l, j) - c.dG(k, j, l, j);
        for (int i = 0; i < d; ++i)
          r += c.G(k, l, j) * c.G(i, j, i) - c.G(i, l, j) * c.G(k, j, i) - tab.w(i, k, j) * c.G(j, l, i);
      }
      ric(k, l) = r;
    }
  return ric;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// B_{k,p}: coefficient of (Z_p f)(X_k f) / 2 in the cross term.
Eigen::MatrixXd cross_block(const StructureJets& t) {
  const int d = t.values.d;
  const int v = t.values.v;
  const auto& w = t.values;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, v);
  for (int k = 0; k < d; ++k)
    for (int p = 0; p < v; ++p) {
      double b = 0.0;
      for (int l = 0; l < d; ++l)
        for (int j = 0; j < d; ++j) b += w.w(j, l, l) * w.g(k, j, p);
      for (int l = 0; l < d; ++l)
        for (int j = l + 1; j < d; ++j) b += w.w(l, j, k) * w.g(l, j, p);
      for (int j = 0; j < d; ++j) b -= t.along(X(j), t.jets.g(k, j, p));
      B(k, p) = b;
    }
  return B;
}

Eigen::MatrixXd horizontal_block(const StructureJets& t) {
  const int d = t.values.d;
  const int v = t.values.v;
  const auto& w = t.values;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      double a = 0.0;
      for (int j = 0; j < d; ++j) {
        for (int p = 0; p < v; ++p) a += 2.0 * w.g(k, j, p) * w.dl(j, p, l);
        a += t.along(X(l), t.jets.w(k, j, j)) - t.along(X(j), t.jets.w(l, j, k));
      }
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a += w.w(j, i, i) * w.w(k, j, l);
      for (int i = 0; i < d; ++i) a -= w.w(k, i, i) * w.w(l, i, i);
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
          a += 0.5 * (w.w(i, j, l) * w.w(i, j, k) - (w.w(l, j, i) + w.w(l, i, j)) * (w.w(k, j, i) + w.w(k, i, j)));
      A(k, l) = a;
    }
  return A;
}

}  // namespace

Eigen::MatrixXd ricci(const SubRiemannianStructure& s, const ChartPoint& x, RicciRoute route) {
  const StructureJets t = route == RicciRoute::Definition ? bracket_structure_jets(s, x) : declared_structure_jets(s, x);
  const ChristoffelData c = christoffel(t, x);
  return route == RicciRoute::Definition ? ricci_definition(t, c) : ricci_formula(t, c);
}

Eigen::MatrixXd r_form(const SubRiemannianStructure& s, const ChartPoint& x, RRoute route) {
  const int d = s.d();
  const int v = s.v();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(d + v, d + v);
  if (route == RRoute::Structural) {
    const StructureJets t = declared_structure_jets(s, x);
    Q.topLeftCorner(d, d) = symmetrize(horizontal_block(t));
    if (v > 0) {
      const Eigen::MatrixXd B = cross_block(t);
      Q.topRightCorner(d, v) = B;
      Q.bottomLeftCorner(v, d) = B.transpose();
      // (1/2) sum_{l<j} (2 sum_p gamma^p_lj z_p)^2
      Eigen::MatrixXd V = Eigen::MatrixXd::Zero(v, v);
      for (int l = 0; l < d; ++l)
        for (int j = l + 1; j < d; ++j) {
          Eigen::VectorXd g(v);
          for (int p = 0; p < v; ++p) g(p) = t.values.g(l, j, p);
          V += 2.0 * g * g.transpose();
        }
      Q.bottomRightCorner(v, v) = V;
    }
    return Q;
  }

  const StructureJets raw = bracket_structure_jets(s, x);
  const ChristoffelData c = christoffel(raw, x);
  Q.topLeftCorner(d, d) = symmetrize(ricci_definition(raw, c));
  if (v > 0) {
    const TorsionValue T = torsion(raw, c);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, v);
    // -sum_{l,k} ((nabla_l T)(X_l, X_k) f)(X_k f), split evenly across the two off-diagonal blocks
    for (int k = 0; k < d; ++k)
      for (int p = 0; p < v; ++p) {
        double acc = 0.0;
        for (int l = 0; l < d; ++l) acc += T.dT(l, l, k, p);
        H(k, p) = -0.5 * acc;
      }
    Q.topRightCorner(d, v) = H;
    Q.bottomLeftCorner(v, d) = H.transpose();
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(v, v);
    for (int l = 0; l < d; ++l)
      for (int k = 0; k < d; ++k) {
        Eigen::VectorXd tv(v);
        for (int p = 0; p < v; ++p) tv(p) = T.T(l, k, p);
        V += 0.25 * tv * tv.transpose();
      }
    Q.bottomRightCorner(v, v) = V;
  }
  return Q;
}

std::vector<Eigen::MatrixXd> j_operators(const SubRiemannianStructure& s, const ChartPoint& x) {
  s.check_point(x);
  const FrameSample<double> fs = s.sample(x);
  std::vector<Eigen::MatrixXd> out;
  for (int p = 0; p < s.v(); ++p) {
    Eigen::MatrixXd J(s.d(), s.d());
    for (int i = 0; i < s.d(); ++i)
      for (int j = 0; j < s.d(); ++j) J(i, j) = fs.g(i, j, p);
    out.push_back(std::move(J));
  }
  return out;
}

Eigen::MatrixXd t_form(const SubRiemannianStructure& s, const ChartPoint& x) {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(s.d(), s.d());
  for (const auto& J : j_operators(s, x)) T += 2.0 * J.transpose() * J;
  return T;
}

CurvatureReport curvature_report(const SubRiemannianStructure& s, const ChartPoint& x) {
  CurvatureReport r;
  r.point = x;
  r.ricci = ricci(s, x, RicciRoute::Formula);
  r.r_structural = r_form(s, x, RRoute::Structural);
  r.r_tensorial = r_form(s, x, RRoute::Tensorial);
  r.j_ops = j_operators(s, x);
  r.t_form = t_form(s, x);
  return r;
}

Eigen::VectorXd gradient_data(FieldDerivatives& fd) {
  const int d = fd.structure().d();
  const int v = fd.structure().v();
  Eigen::VectorXd w(d + v);
  for (int k = 0; k < d; ++k) w(k) = fd.Xf(k);
  for (int p = 0; p < v; ++p) w(d + p) = fd.Zf(p);
  return w;
}

double r_value(FieldDerivatives& fd) {
  const SubRiemannianStructure& s = fd.structure();
  const int d = s.d();
  const int h = s.h();
  const auto& w = fd.tables();
  const auto& vi = s.vertical_indexing();

  // antisymmetric extensions to all (m, n), 0-based labels
  auto gam = [&](int i, int j, int m, int n) {
    if (m == n) return 0.0;
    const auto [p, sg] = vi.flatten(m + 1, n + 1);
    return sg * w.g(i, j, p);
  };
  auto del = [&](int i, int m, int n, int l) {
    if (m == n) return 0.0;
    const auto [p, sg] = vi.flatten(m + 1, n + 1);
    return sg * w.dl(i, p, l);
  };
  auto dgam = [&](int along, int i, int j, int m, int n) {
    if (m == n) return 0.0;
    const auto [p, sg] = vi.flatten(m + 1, n + 1);
    return sg * fd.d_gamma(X(along), i, j, p);
  };
  auto zf = [&](int m, int n) {
    if (m == n) return 0.0;
    const auto [p, sg] = vi.flatten(m + 1, n + 1);
    return sg * fd.Zf(p);
  };

  std::vector<double> g(d);
  for (int k = 0; k < d; ++k) g[k] = fd.Xf(k);

  double first = 0.0;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      double a = 0.0;
      for (int j = 0; j < d; ++j)
        for (int m = 0; m < h; ++m)
          for (int n = 0; n < h; ++n) a += gam(k, j, m, n) * del(j, m, n, l);
      for (int j = 0; j < d; ++j) a += fd.d_omega(X(l), k, j, j) - fd.d_omega(X(j), l, j, k);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a += w.w(j, i, i) * w.w(k, j, l);
      for (int i = 0; i < d; ++i) a -= w.w(k, i, i) * w.w(l, i, i);
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
          a += 0.5 * (w.w(i, j, l) * w.w(i, j, k) - (w.w(l, j, i) + w.w(l, i, j)) * (w.w(k, j, i) + w.w(k, i, j)));
      first += a * g[k] * g[l];
    }

  double second = 0.0;
  for (int k = 0; k < d; ++k)
    for (int m = 0; m < h; ++m)
      for (int n = 0; n < h; ++n) {
        if (m == n) continue;
        double b = 0.0;
        for (int l = 0; l < d; ++l)
          for (int j = 0; j < d; ++j) b += w.w(j, l, l) * gam(k, j, m, n);
        for (int l = 0; l < d; ++l)
          for (int j = l + 1; j < d; ++j) b += w.w(l, j, k) * gam(l, j, m, n);
        for (int j = 0; j < d; ++j) b -= dgam(j, k, j, m, n);
        second += b * zf(m, n) * g[k];
      }

  double third = 0.0;
  for (int l = 0; l < d; ++l)
    for (int j = l + 1; j < d; ++j) {
      double acc = 0.0;
      for (int m = 0; m < h; ++m)
        for (int n = 0; n < h; ++n) acc += gam(l, j, m, n) * zf(m, n);
      third += 0.5 * acc * acc;
    }
  return first + second + third;
}

double r_value(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 1);
  return r_value(fd);
}

}  // namespace srg
