#include "srgeom/calculus.hpp"

#include <cmath>
#include <limits>

namespace srg {

ScalarField ScalarField::polynomial(std::string id, Polynomial p, Backend backend) {
  ScalarField s = closed_form(
      std::move(id), [p](auto x) { return p(x); }, backend);
  s.poly_ = std::move(p);
  return s;
}

ScalarField ScalarField::with_backend(Backend b) const {
  ScalarField s = *this;
  s.backend_ = b;
  return s;
}

double fd_step(int word_length) {
  // Central differences with three Richardson levels have truncation error
  // O(h^8) per level while rounding grows like eps / h^k for k nested
  // levels; balancing the two gives h ~ eps^(1/(8+k)).
  const double eps = std::numeric_limits<double>::epsilon();
  return std::pow(eps, 1.0 / (8.0 + word_length));
}

FieldDerivatives::FieldDerivatives(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x,
                                   int max_order)
    : s_(&s), f_(&f), x_(x), max_order_(max_order),
      frame_(s, x.coords(), f.backend() == Backend::Exact ? std::max(max_order, 1) : 1) {
  s.check_point(x);
  if (max_order > kMaxWordLength) throw UnsupportedOrderError("derivative order above 4 is not supported");
}

const Jet& FieldDerivatives::jet_word(const FrameWord& w) {
  auto it = jets_.find(w);
  if (it != jets_.end()) return it->second;
  Jet j;
  if (w.empty()) {
    j = (*f_)(std::span<const Jet>(frame_.coordinates()));
  } else {
    FrameWord inner(w.begin() + 1, w.end());
    const Jet& g = jet_word(inner);
    j = frame_.apply(w.front(), g);
  }
  return jets_.emplace(w, std::move(j)).first->second;
}

double FieldDerivatives::fd_word(std::span<const FrameLabel> w, std::vector<double>& y, double h) {
  if (w.empty()) return (*f_)(std::span<const double>(y));
  s_->evaluate(y, scratch_);
  std::vector<double> dir(s_->dim());
  for (int a = 0; a < s_->dim(); ++a) dir[a] = scratch_.field(w.front(), a);
  auto inner = w.subspan(1);
  const std::vector<double> base = y;
  auto at = [&](double step) {
    std::vector<double> z(base.size());
    for (std::size_t a = 0; a < base.size(); ++a) z[a] = base[a] + step * dir[a];
    return fd_word(inner, z, h);
  };
  auto central = [&](double step) { return (at(step) - at(-step)) / (2.0 * step); };
  // Richardson tableau on h, h/2, h/4, h/8
  double t[4];
  for (int k = 0; k < 4; ++k) t[k] = central(h / double(1 << k));
  double factor = 4.0;
  for (int level = 1; level < 4; ++level, factor *= 4.0)
    for (int k = 3; k >= level; --k) t[k] = (factor * t[k] - t[k - 1]) / (factor - 1.0);
  return t[3];
}

double FieldDerivatives::word(const FrameWord& w) {
  if (static_cast<int>(w.size()) > kMaxWordLength)
    throw UnsupportedOrderError("frame words longer than 4 are not supported");
  for (const FrameLabel& l : w) {
    const int limit = l.vertical ? s_->v() : s_->d();
    if (l.index < 0 || l.index >= limit) throw InvalidIndexError("frame label out of range");
  }
  auto it = values_.find(w);
  if (it != values_.end()) return it->second;
  double value;
  if (f_->backend() == Backend::Exact) {
    if (static_cast<int>(w.size()) > max_order_)
      throw UnsupportedOrderError("word longer than the jet order of this evaluation");
    value = jet_word(w).value();
  } else {
    std::vector<double> y = x_.vector();
    value = fd_word(w, y, fd_step(static_cast<int>(w.size())));
  }
  values_.emplace(w, value);
  return value;
}

double FieldDerivatives::d_omega(FrameLabel label, int i, int j, int l) {
  return frame_.apply(label, frame_.jets().w(i, j, l)).value();
}

double FieldDerivatives::d_gamma(FrameLabel label, int i, int j, int p) {
  return frame_.apply(label, frame_.jets().g(i, j, p)).value();
}

double FieldDerivatives::d_delta(FrameLabel label, int i, int p, int l) {
  return frame_.apply(label, frame_.jets().dl(i, p, l)).value();
}

double FieldDerivatives::drift_coefficient(int a) const {
  const auto& t = tables();
  double c = 0.0;
  for (int k = 0; k < t.d; ++k) c += t.w(a, k, k);
  return c;
}

double FieldDerivatives::d_drift_coefficient(FrameLabel label, int a) {
  double c = 0.0;
  for (int k = 0; k < s_->d(); ++k) c += d_omega(label, a, k, k);
  return c;
}

double apply_frame_word(const SubRiemannianStructure& s, const FrameWord& word, const ScalarField& f,
                        const ChartPoint& x) {
  if (static_cast<int>(word.size()) > kMaxWordLength)
    throw UnsupportedOrderError("frame words longer than 4 are not supported");
  FieldDerivatives fd(s, f, x, std::max<int>(1, static_cast<int>(word.size())));
  return fd.word(word);
}

double sublaplacian(FieldDerivatives& fd) {
  const int d = fd.structure().d();
  double lf = 0.0;
  for (int j = 0; j < d; ++j) lf += fd.XXf(j, j);
  for (int a = 0; a < d; ++a) lf -= fd.drift_coefficient(a) * fd.Xf(a);
  return lf;
}

double sublaplacian(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 2);
  return sublaplacian(fd);
}

double sublaplacian_of_derivative(FieldDerivatives& fd, FrameLabel inner) {
  const int d = fd.structure().d();
  double r = 0.0;
  for (int j = 0; j < d; ++j) r += fd.word({X(j), X(j), inner});
  for (int a = 0; a < d; ++a) r -= fd.drift_coefficient(a) * fd.word({X(a), inner});
  return r;
}

double derivative_of_sublaplacian(FieldDerivatives& fd, FrameLabel outer) {
  const int d = fd.structure().d();
  double r = 0.0;
  for (int j = 0; j < d; ++j) r += fd.word({outer, X(j), X(j)});
  for (int a = 0; a < d; ++a)
    r -= fd.d_drift_coefficient(outer, a) * fd.Xf(a) + fd.drift_coefficient(a) * fd.word({outer, X(a)});
  return r;
}

double carre_du_champ(const SubRiemannianStructure& s, const ScalarField& f, const ScalarField& g,
                      const ChartPoint& x) {
  FieldDerivatives a(s, f, x, 1);
  FieldDerivatives b(s, g, x, 1);
  double r = 0.0;
  for (int i = 0; i < s.d(); ++i) r += a.Xf(i) * b.Xf(i);
  return r;
}

FormValue forms(FieldDerivatives& fd) {
  const int d = fd.structure().d();
  const int v = fd.structure().v();
  FormValue out;
  out.point = fd.point();

  double l_gamma = 0.0;
  double gamma_f_lf = 0.0;
  for (int i = 0; i < d; ++i) {
    const double xi = fd.Xf(i);
    out.gamma += xi * xi;
    double hess = 0.0;
    for (int j = 0; j < d; ++j) {
      const double xji = fd.word({X(j), X(i)});
      hess += xji * xji;
    }
    l_gamma += 2.0 * xi * sublaplacian_of_derivative(fd, X(i)) + 2.0 * hess;
    gamma_f_lf += xi * derivative_of_sublaplacian(fd, X(i));
  }
  out.gamma2 = 0.5 * l_gamma - gamma_f_lf;

  // Vertical forms: the double sum over (m, n) counts each ordered pair twice.
  double l_gammaz = 0.0;
  double gammaz_f_lf = 0.0;
  for (int p = 0; p < v; ++p) {
    const double zp = fd.Zf(p);
    out.gammaZ += 2.0 * zp * zp;
    double mixed = 0.0;
    for (int j = 0; j < d; ++j) {
      const double xjz = fd.word({X(j), Zv(p)});
      mixed += xjz * xjz;
    }
    l_gammaz += 2.0 * (2.0 * zp * sublaplacian_of_derivative(fd, Zv(p)) + 2.0 * mixed);
    gammaz_f_lf += 2.0 * zp * derivative_of_sublaplacian(fd, Zv(p));
  }
  out.gamma2Z = 0.5 * l_gammaz - gammaz_f_lf;
  out.lf = sublaplacian(fd);
  return out;
}

FormValue forms(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 3);
  return forms(fd);
}

Eigen::MatrixXd sym_hessian(FieldDerivatives& fd) {
  const int d = fd.structure().d();
  Eigen::MatrixXd h(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) h(i, j) = 0.5 * (fd.XXf(i, j) + fd.XXf(j, i));
  return h;
}

Eigen::MatrixXd sym_hessian(const SubRiemannianStructure& s, const ScalarField& f, const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 2);
  return sym_hessian(fd);
}

std::vector<double> commutator_LZ_residual(const SubRiemannianStructure& s, const ScalarField& f,
                                           const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 2);
  const int d = s.d();
  const auto& t = fd.tables();
  std::vector<double> out(s.v(), 0.0);
  for (int p = 0; p < s.v(); ++p) {
    double r = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int l = 0; l < d; ++l) {
        r += fd.d_delta(X(i), i, p, l) * fd.Xf(l);
        r += t.dl(i, p, l) * (fd.XXf(i, l) + fd.XXf(l, i));
        r -= fd.drift_coefficient(i) * t.dl(i, p, l) * fd.Xf(l);
      }
      r += fd.d_drift_coefficient(Zv(p), i) * fd.Xf(i);
    }
    out[p] = r;
  }
  return out;
}

std::vector<double> commutator_LZ_direct(const SubRiemannianStructure& s, const ScalarField& f,
                                         const ChartPoint& x) {
  FieldDerivatives fd(s, f, x, 3);
  std::vector<double> out(s.v(), 0.0);
  for (int p = 0; p < s.v(); ++p)
    out[p] = sublaplacian_of_derivative(fd, Zv(p)) - derivative_of_sublaplacian(fd, Zv(p));
  return out;
}

}  // namespace srg
