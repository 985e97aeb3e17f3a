#pragma once

#include <span>
#include <vector>

#include "srgeom/jet.hpp"

namespace srg {

class RandomStream;

struct Monomial {
  std::vector<int> exps;
  double coef = 0.0;
};

/// Polynomial in chart coordinates, optionally written in shifted and scaled
/// variables u_a = (x_a - center_a) / scale_a. Evaluates on doubles and on
/// jets, so a polynomial field or coefficient gets exact derivatives for free.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}
  Polynomial(int nvars, std::vector<Monomial> terms);

  static Polynomial constant(int nvars, double c);
  /// Dense random polynomial of total degree <= max_degree with coefficients
  /// uniform in [-1, 1], written in the normalized variables of the box
  /// [center - scale, center + scale].
  static Polynomial random(int nvars, int max_degree, RandomStream& rng, std::vector<double> center,
                           std::vector<double> scale);

  int nvars() const { return nvars_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::vector<Monomial>& terms() const { return terms_; }
  const std::vector<double>& center() const { return center_; }
  const std::vector<double>& scale() const { return scale_; }
  void set_affine(std::vector<double> center, std::vector<double> scale);

  /// Folds the affine change of variables into plain chart-coordinate
  /// monomials.
  Polynomial expanded() const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator*(double s) const;

  template <class T>
  T operator()(std::span<const T> x) const {
    const int deg = degree();
    std::vector<std::vector<T>> powers(nvars_);
    for (int a = 0; a < nvars_; ++a) {
      T u = x[a];
      if (!center_.empty()) u = (u - center_[a]) / scale_[a];
      powers[a].reserve(deg + 1);
      powers[a].push_back(constant_like(x[0], 1.0));
      for (int k = 1; k <= deg; ++k) powers[a].push_back(powers[a].back() * u);
    }
    T acc = constant_like(x[0], 0.0);
    for (const Monomial& m : terms_) {
      T term = constant_like(x[0], m.coef);
      for (int a = 0; a < nvars_; ++a)
        if (m.exps[a] > 0) term = term * powers[a][m.exps[a]];
      acc += term;
    }
    return acc;
  }

 private:
  int nvars_ = 0;
  std::vector<Monomial> terms_;
  std::vector<double> center_;
  std::vector<double> scale_;
};

}  // namespace srg
