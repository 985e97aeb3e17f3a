#include "srgeom/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace srg {

namespace {

// Enumerates exponent vectors of total degree exactly `deg`, lexicographically
// descending in the first variable.
void enumerate_degree(int nvars, int deg, std::vector<int>& current, int var,
                      std::vector<std::vector<int>>& out) {
  if (var == nvars - 1) {
    current[var] = deg;
    out.push_back(current);
    return;
  }
  for (int e = deg; e >= 0; --e) {
    current[var] = e;
    enumerate_degree(nvars, deg - e, current, var + 1, out);
  }
}

}  // namespace

JetLayout::JetLayout(int nvars, int order) : nvars_(nvars), order_(order) {
  if (nvars < 1 || order < 0) throw std::invalid_argument("JetLayout: bad dimensions");
  std::vector<std::vector<int>> monos;
  prefix_.assign(order + 1, 0);
  for (int deg = 0; deg <= order; ++deg) {
    std::vector<int> cur(nvars, 0);
    enumerate_degree(nvars, deg, cur, 0, monos);
    prefix_[deg] = static_cast<int>(monos.size());
  }
  const int n = static_cast<int>(monos.size());
  exps_.reserve(static_cast<std::size_t>(n) * nvars);
  degree_.resize(n);
  factorial_weight_.resize(n);
  int base = order + 1;
  int table = 1;
  for (int a = 0; a < nvars; ++a) table *= base;
  lookup_.assign(table, -1);
  for (int k = 0; k < n; ++k) {
    int deg = 0;
    int code = 0;
    double fw = 1.0;
    for (int a = 0; a < nvars; ++a) {
      int e = monos[k][a];
      exps_.push_back(e);
      deg += e;
      code = code * base + e;
      for (int q = 2; q <= e; ++q) fw *= q;
    }
    degree_[k] = deg;
    factorial_weight_[k] = fw;
    lookup_[code] = k;
  }
  variable_index_.resize(nvars, -1);
  if (order >= 1) {
    std::vector<int> e(nvars, 0);
    for (int a = 0; a < nvars; ++a) {
      e[a] = 1;
      variable_index_[a] = index(e);
      e[a] = 0;
    }
  }

  std::vector<int> sum(nvars);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (degree_[i] + degree_[j] > order) continue;
      for (int a = 0; a < nvars; ++a) sum[a] = exps_[i * nvars + a] + exps_[j * nvars + a];
      products_.push_back({i, j, index(sum)});
    }
  }
  std::stable_sort(products_.begin(), products_.end(), [this](const ProductTerm& x, const ProductTerm& y) {
    return degree_[x.out] < degree_[y.out];
  });
  product_prefix_.assign(order + 1, 0);
  for (int deg = 0; deg <= order; ++deg) {
    product_prefix_[deg] = static_cast<int>(std::count_if(
        products_.begin(), products_.end(), [&](const ProductTerm& t) { return degree_[t.out] <= deg; }));
  }

  derivatives_.resize(nvars);
  for (int a = 0; a < nvars; ++a) {
    for (int k = 0; k < n; ++k) {
      int e = exps_[k * nvars + a];
      if (e == 0) continue;
      std::vector<int> lowered(exps_.begin() + k * nvars, exps_.begin() + (k + 1) * nvars);
      lowered[a] -= 1;
      derivatives_[a].push_back({k, index(lowered), static_cast<double>(e)});
    }
  }
}

const JetLayout& JetLayout::get(int nvars, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> registry;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = registry[{nvars, order}];
  if (!slot) slot.reset(new JetLayout(nvars, order));
  return *slot;
}

std::span<const int> JetLayout::exponents(int k) const {
  return {exps_.data() + static_cast<std::size_t>(k) * nvars_, static_cast<std::size_t>(nvars_)};
}

int JetLayout::index(std::span<const int> exps) const {
  int code = 0;
  int deg = 0;
  for (int a = 0; a < nvars_; ++a) {
    if (exps[a] < 0) return -1;
    deg += exps[a];
    if (deg > order_) return -1;
    code = code * (order_ + 1) + exps[a];
  }
  return lookup_[code];
}

std::span<const JetLayout::ProductTerm> JetLayout::product_terms(int k) const {
  k = std::clamp(k, 0, order_);
  return {products_.data(), static_cast<std::size_t>(product_prefix_[k])};
}

std::span<const JetLayout::DerivativeTerm> JetLayout::derivative_terms(int var) const {
  return derivatives_[var];
}

Jet::Jet(const JetLayout& layout, double constant)
    : layout_(&layout), valid_order_(layout.order()), c_(layout.size(), 0.0) {
  c_[0] = constant;
}

Jet Jet::variable(const JetLayout& layout, int var, double value) {
  Jet j(layout, value);
  if (layout.order() >= 1) j.c_[layout.variable_index(var)] = 1.0;
  return j;
}

double Jet::partial_derivative(std::span<const int> exps) const {
  int k = layout_->index(exps);
  if (k < 0 || layout_->degree(k) > valid_order_)
    throw std::out_of_range("Jet::partial_derivative: order exceeds jet validity");
  return c_[k] * layout_->factorial_weight(k);
}

Jet Jet::partial(int var) const {
  if (valid_order_ < 1) throw std::out_of_range("Jet::partial: jet has no derivative information");
  Jet r(*layout_, 0.0);
  r.valid_order_ = valid_order_ - 1;
  const int limit = layout_->prefix(r.valid_order_);
  for (const auto& t : layout_->derivative_terms(var)) {
    if (t.to < limit) r.c_[t.to] = t.factor * c_[t.from];
  }
  return r;
}

Jet Jet::truncated(int order) const {
  Jet r = *this;
  if (order < r.valid_order_) {
    r.valid_order_ = order;
    std::fill(r.c_.begin() + layout_->prefix(order), r.c_.end(), 0.0);
  }
  return r;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (double& v : r.c_) v = -v;
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  const int order = std::min(valid_order_, o.valid_order_);
  const int limit = layout_->prefix(order);
  for (int k = 0; k < limit; ++k) c_[k] += o.c_[k];
  if (order < valid_order_) {
    valid_order_ = order;
    std::fill(c_.begin() + limit, c_.end(), 0.0);
  }
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  const int order = std::min(valid_order_, o.valid_order_);
  const int limit = layout_->prefix(order);
  for (int k = 0; k < limit; ++k) c_[k] -= o.c_[k];
  if (order < valid_order_) {
    valid_order_ = order;
    std::fill(c_.begin() + limit, c_.end(), 0.0);
  }
  return *this;
}

Jet& Jet::operator*=(const Jet& o) {
  *this = *this * o;
  return *this;
}

Jet& Jet::operator/=(const Jet& o) {
  *this = *this / o;
  return *this;
}

Jet& Jet::operator+=(double s) {
  c_[0] += s;
  return *this;
}

Jet& Jet::operator-=(double s) {
  c_[0] -= s;
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Jet& Jet::operator/=(double s) {
  for (double& v : c_) v /= s;
  return *this;
}

void Jet::add_product(const Jet& a, const Jet& b) {
  const int order = std::min({valid_order_, a.valid_order_, b.valid_order_});
  if (order < valid_order_) *this = truncated(order);
  const double* pa = a.c_.data();
  const double* pb = b.c_.data();
  double* pc = c_.data();
  for (const auto& t : layout_->product_terms(order)) pc[t.out] += pa[t.lhs] * pb[t.rhs];
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.layout(), 0.0);
  r.add_product(a, b);
  return r;
}

Jet operator/(const Jet& a, const Jet& b) { return a * pow(b, -1.0); }

Jet operator/(double s, const Jet& a) { return pow(a, -1.0) * s; }

Jet compose(const Jet& x, std::span<const double> taylor) {
  // x = x0 + h with h nilpotent; sum taylor[k] h^k by Horner's rule.
  const int order = x.valid_order_;
  Jet h = x;
  h.c_[0] = 0.0;
  const int top = std::min<int>(order, static_cast<int>(taylor.size()) - 1);
  Jet acc(x.layout(), taylor[top]);
  acc = acc.truncated(order);
  for (int k = top - 1; k >= 0; --k) {
    acc = acc * h;
    acc.c_[0] += taylor[k];
  }
  return acc;
}

namespace {

std::vector<double> sin_cos_taylor(double s, double c, int order, bool sine) {
  // derivatives of sin cycle: sin, cos, -sin, -cos
  std::vector<double> t(order + 1);
  double fact = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) fact *= k;
    double d;
    int phase = (k + (sine ? 0 : 1)) % 4;
    switch (phase) {
      case 0: d = s; break;
      case 1: d = c; break;
      case 2: d = -s; break;
      default: d = -c; break;
    }
    t[k] = d / fact;
  }
  return t;
}

}  // namespace

Jet sin(const Jet& x) {
  double v = x.value();
  return compose(x, sin_cos_taylor(std::sin(v), std::cos(v), x.valid_order(), true));
}

Jet cos(const Jet& x) {
  double v = x.value();
  return compose(x, sin_cos_taylor(std::sin(v), std::cos(v), x.valid_order(), false));
}

Jet tan(const Jet& x) { return sin(x) / cos(x); }

Jet exp(const Jet& x) {
  const int order = x.valid_order();
  std::vector<double> t(order + 1);
  double e = std::exp(x.value());
  double fact = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) fact *= k;
    t[k] = e / fact;
  }
  return compose(x, t);
}

Jet log(const Jet& x) {
  double v = x.value();
  if (!(v > 0.0)) throw std::domain_error("log of a jet with nonpositive value");
  const int order = x.valid_order();
  std::vector<double> t(order + 1);
  t[0] = std::log(v);
  double p = 1.0;
  for (int k = 1; k <= order; ++k) {
    p /= v;
    t[k] = ((k % 2 == 1) ? 1.0 : -1.0) * p / k;
  }
  return compose(x, t);
}

Jet pow(const Jet& x, double r) {
  double v = x.value();
  if (v == 0.0) throw std::domain_error("pow of a jet with zero value");
  const int order = x.valid_order();
  std::vector<double> t(order + 1);
  // binom(r, k) v^(r-k)
  double coeff = std::pow(v, r);
  t[0] = coeff;
  for (int k = 1; k <= order; ++k) {
    coeff *= (r - (k - 1)) / (k * v);
    t[k] = coeff;
  }
  return compose(x, t);
}

Jet sqrt(const Jet& x) {
  if (!(x.value() > 0.0)) throw std::domain_error("sqrt of a jet with nonpositive value");
  return pow(x, 0.5);
}

Jet atan(const Jet& x) {
  // derivative 1/(1+x^2) composed, then integrated termwise
  const int order = x.valid_order();
  double v = x.value();
  std::vector<double> t(order + 1, 0.0);
  t[0] = std::atan(v);
  if (order >= 1) {
    // Taylor coefficients of g(h) = 1/(1 + (v+h)^2) up to order-1
    std::vector<double> q = {1.0 + v * v, 2.0 * v, 1.0};
    std::vector<double> g(order, 0.0);
    g[0] = 1.0 / q[0];
    for (int k = 1; k < order; ++k) {
      double s = 0.0;
      for (int j = 1; j <= std::min(k, 2); ++j) s += q[j] * g[k - j];
      g[k] = -s / q[0];
    }
    for (int k = 1; k <= order; ++k) t[k] = g[k - 1] / k;
  }
  return compose(x, t);
}

}  // namespace srg
