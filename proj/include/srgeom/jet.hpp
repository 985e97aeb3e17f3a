#pragma once

#include <span>
#include <vector>

namespace srg {

/// Monomial bookkeeping for truncated Taylor polynomials in `nvars` variables
/// up to total degree `order`. Monomials are stored graded by degree, so the
/// coefficients of degree <= k always form a prefix of the coefficient array.
/// Layouts are interned; `get` returns a reference that lives for the whole
/// program.
class JetLayout {
 public:
  struct ProductTerm {
    int lhs;
    int rhs;
    int out;
  };
  struct DerivativeTerm {
    int from;
    int to;
    double factor;
  };

  static const JetLayout& get(int nvars, int order);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(degree_.size()); }
  int degree(int k) const { return degree_[k]; }
  /// Number of monomials with degree <= k.
  int prefix(int k) const { return prefix_[k]; }
  std::span<const int> exponents(int k) const;
  /// Index of a monomial given its exponent vector, or -1 if its degree
  /// exceeds the layout order.
  int index(std::span<const int> exps) const;
  int variable_index(int a) const { return variable_index_[a]; }
  /// Product terms whose output degree is <= k.
  std::span<const ProductTerm> product_terms(int k) const;
  std::span<const DerivativeTerm> derivative_terms(int var) const;
  /// Product of factorials of the exponents of monomial k.
  double factorial_weight(int k) const { return factorial_weight_[k]; }

 private:
  JetLayout(int nvars, int order);

  int nvars_;
  int order_;
  std::vector<int> exps_;
  std::vector<int> degree_;
  std::vector<int> prefix_;
  std::vector<int> lookup_;
  std::vector<int> variable_index_;
  std::vector<ProductTerm> products_;
  std::vector<int> product_prefix_;
  std::vector<std::vector<DerivativeTerm>> derivatives_;
  std::vector<double> factorial_weight_;
};

/// Truncated Taylor expansion around a fixed base point. A jet carries its
/// own valid order, which is at most the layout order and drops by one each
/// time a partial derivative is taken.
class Jet {
 public:
  Jet() = default;
  Jet(const JetLayout& layout, double constant);

  static Jet variable(const JetLayout& layout, int var, double value);

  const JetLayout& layout() const { return *layout_; }
  bool empty() const { return layout_ == nullptr; }
  int valid_order() const { return valid_order_; }
  double value() const { return c_[0]; }
  double coefficient(int k) const { return c_[k]; }
  std::span<const double> coefficients() const { return c_; }

  /// Mixed partial derivative at the base point, d^|e| / dx^e.
  double partial_derivative(std::span<const int> exps) const;
  /// The jet of d/dx_var; its valid order is one less.
  Jet partial(int var) const;
  /// A copy truncated to a smaller valid order.
  Jet truncated(int order) const;

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);

  /// Accumulates a*b into this jet without forming the temporary.
  void add_product(const Jet& a, const Jet& b);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator/(double s, const Jet& a);

 private:
  friend Jet compose(const Jet& x, std::span<const double> taylor);

  const JetLayout* layout_ = nullptr;
  int valid_order_ = 0;
  std::vector<double> c_;
};

/// f(x) for f given by its Taylor coefficients f^(k)(x0)/k! at the value of x.
Jet compose(const Jet& x, std::span<const double> taylor);

/// Builds a constant of the same kind as `like` (a jet with the same layout,
/// or a plain double).
inline double constant_like(double, double c) { return c; }
inline Jet constant_like(const Jet& like, double c) { return Jet(like.layout(), c); }

Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet tan(const Jet& x);
Jet exp(const Jet& x);
Jet log(const Jet& x);
Jet sqrt(const Jet& x);
Jet pow(const Jet& x, double r);
Jet atan(const Jet& x);

/// Integer power by repeated multiplication; works for doubles and jets.
template <class T>
T ipow(const T& x, int n) {
  if (n == 0) return constant_like(x, 1.0);
  T r = x;
  for (int k = 1; k < n; ++k) r = r * x;
  return r;
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

}  // namespace srg
