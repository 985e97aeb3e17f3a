#include "srgeom/polynomial.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "srgeom/rng.hpp"

namespace srg {

namespace {

std::vector<Monomial> canonical(int nvars, std::vector<Monomial> terms) {
  std::map<std::vector<int>, double> acc;
  for (auto& m : terms) {
    if (static_cast<int>(m.exps.size()) != nvars)
      throw std::invalid_argument("polynomial term has the wrong number of exponents");
    for (int e : m.exps)
      if (e < 0) throw std::invalid_argument("polynomial term has a negative exponent");
    acc[m.exps] += m.coef;
  }
  std::vector<Monomial> out;
  for (auto& [e, c] : acc)
    if (c != 0.0) out.push_back({e, c});
  return out;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

void enumerate(int nvars, int max_degree, std::vector<int>& cur, int var, int left,
               std::vector<std::vector<int>>& out) {
  if (var == nvars) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur[var] = e;
    enumerate(nvars, max_degree, cur, var + 1, left - e, out);
  }
  cur[var] = 0;
}

}  // namespace

Polynomial::Polynomial(int nvars, std::vector<Monomial> terms)
    : nvars_(nvars), terms_(canonical(nvars, std::move(terms))) {}

Polynomial Polynomial::constant(int nvars, double c) {
  return Polynomial(nvars, {Monomial{std::vector<int>(nvars, 0), c}});
}

Polynomial Polynomial::random(int nvars, int max_degree, RandomStream& rng, std::vector<double> center,
                              std::vector<double> scale) {
  std::vector<std::vector<int>> exps;
  std::vector<int> cur(nvars, 0);
  enumerate(nvars, max_degree, cur, 0, max_degree, exps);
  std::vector<Monomial> terms;
  terms.reserve(exps.size());
  for (auto& e : exps) terms.push_back({e, rng.uniform(-1.0, 1.0)});
  Polynomial p(nvars, std::move(terms));
  p.set_affine(std::move(center), std::move(scale));
  return p;
}

int Polynomial::degree() const {
  int deg = 0;
  for (const auto& m : terms_) {
    int s = 0;
    for (int e : m.exps) s += e;
    deg = std::max(deg, s);
  }
  return deg;
}

void Polynomial::set_affine(std::vector<double> center, std::vector<double> scale) {
  if (center.empty() && scale.empty()) {
    center_.clear();
    scale_.clear();
    return;
  }
  if (static_cast<int>(center.size()) != nvars_ || static_cast<int>(scale.size()) != nvars_)
    throw std::invalid_argument("polynomial affine map has the wrong dimension");
  for (double s : scale)
    if (s == 0.0) throw std::invalid_argument("polynomial affine scale must be nonzero");
  center_ = std::move(center);
  scale_ = std::move(scale);
}

Polynomial Polynomial::expanded() const {
  if (center_.empty()) return *this;
  // prod_a ((x_a - c_a)/s_a)^e_a expanded with the binomial theorem, one
  // variable at a time.
  std::vector<Monomial> out;
  for (const Monomial& m : terms_) {
    std::vector<Monomial> partial = {{std::vector<int>(nvars_, 0), m.coef}};
    for (int a = 0; a < nvars_; ++a) {
      const int e = m.exps[a];
      if (e == 0) continue;
      std::vector<Monomial> next;
      for (const Monomial& p : partial) {
        for (int k = 0; k <= e; ++k) {
          double c = p.coef * binomial(e, k);
          for (int q = 0; q < e - k; ++q) c *= -center_[a];
          for (int q = 0; q < e; ++q) c /= scale_[a];
          Monomial n = p;
          n.exps[a] += k;
          n.coef = c;
          next.push_back(std::move(n));
        }
      }
      partial = std::move(next);
    }
    out.insert(out.end(), partial.begin(), partial.end());
  }
  return Polynomial(nvars_, std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.nvars_ != nvars_) throw std::invalid_argument("polynomial sum: dimension mismatch");
  Polynomial a = expanded();
  Polynomial b = o.expanded();
  std::vector<Monomial> all = a.terms_;
  all.insert(all.end(), b.terms_.begin(), b.terms_.end());
  return Polynomial(nvars_, std::move(all));
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r = *this;
  if (s == 0.0) {
    r.terms_.clear();
    return r;
  }
  for (auto& m : r.terms_) m.coef *= s;
  return r;
}

}  // namespace srg
