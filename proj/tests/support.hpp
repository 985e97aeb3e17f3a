#pragma once

// Independent oracles and generators shared by the test binaries. Nothing in
// here calls into the library's derivative machinery.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <vector>

#include "srgeom/models.hpp"
#include "srgeom/polynomial.hpp"
#include "srgeom/rng.hpp"
#include "srgeom/structure.hpp"

namespace srg::test {

inline constexpr double pi = std::numbers::pi;

inline Polynomial poly(int nvars, std::vector<std::pair<std::vector<int>, double>> terms) {
  std::vector<Monomial> ms;
  for (auto& [e, c] : terms) ms.push_back(Monomial{e, c});
  return Polynomial(nvars, std::move(ms));
}

/// Symbolic partial derivative of a polynomial written in plain chart
/// variables.
inline Polynomial partial(const Polynomial& p, int a) {
  const Polynomial q = p.center().empty() ? p : p.expanded();
  std::vector<Monomial> out;
  for (const Monomial& m : q.terms()) {
    if (m.exps[a] == 0) continue;
    Monomial d = m;
    d.coef *= m.exps[a];
    d.exps[a] -= 1;
    out.push_back(d);
  }
  return Polynomial(q.nvars(), std::move(out));
}

inline double eval(const Polynomial& p, std::vector<double> x) { return p(std::span<const double>(x)); }

/// Heat kernel of X1^2 + X2^2 on the first Heisenberg group with
/// X1 = dx - (y/2) dz, X2 = dy + (x/2) dz, from the origin:
///   p_t(x, y, z) = (1/pi) int_0^inf cos(lambda z) lambda / (4 pi sinh(lambda t))
///                  exp(-lambda coth(lambda t) r^2 / 4) dlambda.
inline double heisenberg_kernel(double x, double y, double z, double t) {
  const double r2 = x * x + y * y;
  auto integrand = [=](double lam) {
    if (lam < 1e-8) return 1.0 / (4.0 * pi * t) * std::exp(-r2 / (4.0 * t));
    const double lt = lam * t;
    return std::cos(lam * z) * lam / (4.0 * pi * std::sinh(lt)) * std::exp(-lam / std::tanh(lt) * r2 / 4.0);
  };
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate(integrand) / pi;
}

/// Hand-built first Heisenberg group with adjustable tables, for the
/// perturbation tests.
struct PerturbedHeisenberg {
  double gamma = 0.5;
  double delta_102 = 0.0;  // delta^2_{1,12} written with 0-based (i=0, p=0, l=1)

  template <class T>
  void fill(std::span<const T> x, FrameSample<T>& out) const {
    out.X(0, 0) = constant_like(x[0], 1.0);
    out.X(0, 2) = -0.5 * x[1];
    out.X(1, 1) = constant_like(x[0], 1.0);
    out.X(1, 2) = 0.5 * x[0];
    out.Z(0, 2) = constant_like(x[0], 1.0);
    // [X1, X2] = Z = 2 gamma Z: the two orientations each carry gamma
    out.set_gamma(0, 1, 0, constant_like(x[0], gamma));
    out.dl(0, 0, 1) = constant_like(x[0], delta_102);
    out.density = constant_like(x[0], 1.0);
  }
};

inline SubRiemannianStructure perturbed_heisenberg(PerturbedHeisenberg p) {
  return SubRiemannianStructure("perturbed", 2, 2, 3,
                                std::make_shared<ClosedFormSource<PerturbedHeisenberg>>(p, 3, 2, 1),
                                Chart::unbounded(3));
}

/// Uniform points in a box.
inline std::vector<ChartPoint> box_points(const ModelDescriptor& m, int n, std::uint64_t seed) {
  RandomStream rng(seed, 99);
  return sample_points(m, n, rng);
}

inline Polynomial random_field(const ModelDescriptor& m, int dim, int degree, std::uint64_t seed, std::uint64_t k) {
  RandomStream rng(seed, 5000 + k);
  return Polynomial::random(dim, degree, rng, m.box_center, m.box_half_width);
}

}  // namespace srg::test
