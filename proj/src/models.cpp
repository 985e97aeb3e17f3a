#include "srgeom/models.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <regex>
#include <stdexcept>

#include "srgeom/rng.hpp"

namespace srg {

namespace {

using std::numbers::pi;

struct EuclideanFrame {
  int d;
  template <class T>
  void fill(std::span<const T> x, FrameSample<T>& out) const {
    for (int i = 0; i < d; ++i) out.X(i, i) = constant_like(x[0], 1.0);
    out.density = constant_like(x[0], 1.0);
  }
};

// Coordinates (x_1..x_n, y_1..y_n, z).
struct HeisenbergFrame {
  int n;
  template <class T>
  void fill(std::span<const T> x, FrameSample<T>& out) const {
    const int zc = 2 * n;
    for (int i = 0; i < n; ++i) {
      out.X(i, i) = constant_like(x[0], 1.0);
      out.X(i, zc) = -0.5 * x[n + i];
      out.X(n + i, n + i) = constant_like(x[0], 1.0);
      out.X(n + i, zc) = 0.5 * x[i];
      out.set_gamma(i, n + i, 0, constant_like(x[0], 0.5));
    }
    out.Z(0, zc) = constant_like(x[0], 1.0);
    out.density = constant_like(x[0], 1.0);
  }
};

// Coordinates (x1, x2, x3, z12, z13, z23).
struct FreeStep2Frame {
  template <class T>
  void fill(std::span<const T> x, FrameSample<T>& out) const {
    for (int i = 0; i < 3; ++i) {
      out.X(i, i) = constant_like(x[0], 1.0);
      for (int m = 0; m < i; ++m) out.X(i, 3 + free_step2_pair_index(m, i)) = 0.5 * x[m];
      for (int n = i + 1; n < 3; ++n) out.X(i, 3 + free_step2_pair_index(i, n)) = -0.5 * x[n];
    }
    for (int p = 0; p < 3; ++p) out.Z(p, 3 + p) = constant_like(x[0], 1.0);
    for (int m = 0; m < 3; ++m)
      for (int n = m + 1; n < 3; ++n) out.set_gamma(m, n, free_step2_pair_index(m, n), constant_like(x[0], 0.5));
    out.density = constant_like(x[0], 1.0);
  }
};

// Coordinates (theta, phi).
struct SphereFrame {
  template <class T>
  void fill(std::span<const T> x, FrameSample<T>& out) const {
    using std::cos;
    using std::sin;
    const T s = sin(x[0]);
    out.X(0, 0) = constant_like(x[0], 1.0);
    out.X(1, 1) = 1.0 / s;
    out.set_omega(0, 1, 1, -cos(x[0]) / s);
    out.density = s;
  }
};

// Hopf coordinates (eta, xi1, xi2): z1 = cos(eta) e^{i xi1}, z2 = sin(eta) e^{i xi2}.
struct SU2Frame {
  template <class T>
  void fill(std::span<const T> x, FrameSample<T>& out) const {
    using std::cos;
    using std::sin;
    const T se = sin(x[0]);
    const T ce = cos(x[0]);
    const T tn = se / ce;
    const T ct = ce / se;
    const T chi = x[1] + x[2];
    const T sc = sin(chi);
    const T cc = cos(chi);
    out.X(0, 0) = -sc;
    out.X(0, 1) = cc * tn;
    out.X(0, 2) = -(cc * ct);
    out.X(1, 0) = cc;
    out.X(1, 1) = sc * tn;
    out.X(1, 2) = -(sc * ct);
    out.Z(0, 1) = constant_like(x[0], -1.0);
    out.Z(0, 2) = constant_like(x[0], -1.0);
    out.set_gamma(0, 1, 0, constant_like(x[0], 1.0));
    out.dl(0, 0, 1) = constant_like(x[0], -2.0);
    out.dl(1, 0, 0) = constant_like(x[0], 2.0);
    out.density = se * ce;
  }
};

template <class Impl>
std::shared_ptr<const StructureSource> make_source(Impl impl, int dim, int d, int v) {
  return std::make_shared<ClosedFormSource<Impl>>(std::move(impl), dim, d, v);
}

GroupLaw heisenberg_group(int n) {
  GroupLaw g;
  const int dim = 2 * n + 1;
  g.identity.assign(dim, 0.0);
  g.multiply = [n](std::span<const double> a, std::span<const double> b, std::span<double> out) {
    double z = a[2 * n] + b[2 * n];
    for (int i = 0; i < n; ++i) z += 0.5 * (a[i] * b[n + i] - a[n + i] * b[i]);
    for (int i = 0; i < 2 * n; ++i) out[i] = a[i] + b[i];
    out[2 * n] = z;
  };
  g.inverse = [dim](std::span<const double> a, std::span<double> out) {
    for (int i = 0; i < dim; ++i) out[i] = -a[i];
  };
  g.horizontal_step = [n](std::span<double> x, std::span<const double> w) {
    double dz = 0.0;
    for (int i = 0; i < n; ++i) dz += 0.5 * (x[i] * w[n + i] - x[n + i] * w[i]);
    for (int i = 0; i < 2 * n; ++i) x[i] += w[i];
    x[2 * n] += dz;
  };
  return g;
}

GroupLaw free_step2_group() {
  GroupLaw g;
  g.identity.assign(6, 0.0);
  g.multiply = [](std::span<const double> a, std::span<const double> b, std::span<double> out) {
    double z[3];
    for (int m = 0; m < 3; ++m)
      for (int n = m + 1; n < 3; ++n) {
        const int p = free_step2_pair_index(m, n);
        z[p] = a[3 + p] + b[3 + p] + 0.5 * (a[m] * b[n] - a[n] * b[m]);
      }
    for (int i = 0; i < 3; ++i) out[i] = a[i] + b[i];
    for (int p = 0; p < 3; ++p) out[3 + p] = z[p];
  };
  g.inverse = [](std::span<const double> a, std::span<double> out) {
    for (int i = 0; i < 6; ++i) out[i] = -a[i];
  };
  g.horizontal_step = [](std::span<double> x, std::span<const double> w) {
    for (int m = 0; m < 3; ++m)
      for (int n = m + 1; n < 3; ++n) x[3 + free_step2_pair_index(m, n)] += 0.5 * (x[m] * w[n] - x[n] * w[m]);
    for (int i = 0; i < 3; ++i) x[i] += w[i];
  };
  return g;
}

using cplx = std::complex<double>;

// First column (z1, z2) of [[z1, -conj(z2)], [z2, conj(z1)]].
std::pair<cplx, cplx> su2_column(std::span<const double> x) {
  return {std::polar(std::cos(x[0]), x[1]), std::polar(std::sin(x[0]), x[2])};
}

void su2_chart(cplx z1, cplx z2, std::span<double> out) {
  const double r1 = std::abs(z1);
  const double r2 = std::abs(z2);
  out[0] = std::atan2(r2, r1);
  out[1] = r1 > 0.0 ? std::arg(z1) : 0.0;
  out[2] = r2 > 0.0 ? std::arg(z2) : 0.0;
  for (int a = 1; a < 3; ++a)
    if (out[a] < 0.0) out[a] += 2.0 * pi;
}

std::pair<cplx, cplx> su2_product(std::pair<cplx, cplx> g, std::pair<cplx, cplx> h) {
  const auto [z1, z2] = g;
  const auto [w1, w2] = h;
  return {z1 * w1 - std::conj(z2) * w2, z2 * w1 + std::conj(z1) * w2};
}

GroupLaw su2_group() {
  GroupLaw g;
  g.identity = {0.0, 0.0, 0.0};
  g.multiply = [](std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const auto [z1, z2] = su2_product(su2_column(a), su2_column(b));
    su2_chart(z1, z2, out);
  };
  g.inverse = [](std::span<const double> a, std::span<double> out) {
    const auto [z1, z2] = su2_column(a);
    su2_chart(std::conj(z1), -z2, out);
  };
  // exp(w1 e1 + w2 e2) with e_a = -i sigma_a has first column
  // (cos r, (w2 - i w1) sin(r) / r), r = |w|.
  g.horizontal_step = [](std::span<double> x, std::span<const double> w) {
    const double r = std::hypot(w[0], w[1]);
    const double sinc = r > 1e-8 ? std::sin(r) / r : 1.0 - r * r / 6.0;
    const cplx h1(std::cos(r), 0.0);
    const cplx h2(w[1] * sinc, -w[0] * sinc);
    const auto [z1, z2] = su2_product(su2_column(x), {h1, h2});
    su2_chart(z1, z2, x);
  };
  return g;
}

Model euclidean(int d) {
  Model m;
  auto s = std::make_shared<SubRiemannianStructure>("euclidean(" + std::to_string(d) + ")", d, 1, d,
                                                    make_source(EuclideanFrame{d}, d, d, 0), Chart::unbounded(d));
  GroupLaw g;
  g.identity.assign(d, 0.0);
  g.multiply = [d](std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (int i = 0; i < d; ++i) out[i] = a[i] + b[i];
  };
  g.inverse = [d](std::span<const double> a, std::span<double> out) {
    for (int i = 0; i < d; ++i) out[i] = -a[i];
  };
  g.horizontal_step = [d](std::span<double> x, std::span<const double> w) {
    for (int i = 0; i < d; ++i) x[i] += w[i];
  };
  s->set_group(std::move(g));
  s->set_graded_chart(true);
  m.structure = s;
  m.descriptor.name = s->name();
  m.descriptor.certified = CDParameters::riemannian(0.0, d);
  m.descriptor.box_center.assign(d, 0.0);
  m.descriptor.box_half_width.assign(d, 1.0);
  m.descriptor.notes = "flat frame; vertical layer empty";
  return m;
}

Model heisenberg(int n) {
  Model m;
  const int dim = 2 * n + 1;
  const std::string name = n == 1 ? "heisenberg" : "heisenberg(" + std::to_string(n) + ")";
  auto s = std::make_shared<SubRiemannianStructure>(name, 2 * n, 2, dim, make_source(HeisenbergFrame{n}, dim, 2 * n, 1),
                                                    Chart::unbounded(dim));
  s->set_group(heisenberg_group(n));
  s->set_graded_chart(true);
  m.structure = s;
  m.descriptor.name = name;
  m.descriptor.certified = CDParameters::sub_riemannian(0.0, 0.25 * n, 0.5, 2 * n, 1);
  m.descriptor.box_center.assign(dim, 0.0);
  m.descriptor.box_half_width.assign(dim, 1.0);
  m.descriptor.notes = "exponential coordinates (x, y, z)";
  return m;
}

Model free_step2_d3() {
  Model m;
  auto s = std::make_shared<SubRiemannianStructure>("free_step2_d3", 3, 3, 6, make_source(FreeStep2Frame{}, 6, 3, 3),
                                                    Chart::unbounded(6));
  s->set_group(free_step2_group());
  s->set_graded_chart(true);
  m.structure = s;
  m.descriptor.name = "free_step2_d3";
  m.descriptor.certified = CDParameters::sub_riemannian(0.0, 0.25, 1.0, 3, 3);
  m.descriptor.box_center.assign(6, 0.0);
  m.descriptor.box_half_width.assign(6, 1.0);
  m.descriptor.notes = "exponential coordinates (x1, x2, x3, z12, z13, z23)";
  return m;
}

Model sphere2() {
  Model m;
  Chart chart({ChartAxis{0.1, pi - 0.1, 0.0}, ChartAxis{0.0, 2.0 * pi, 2.0 * pi}});
  auto s = std::make_shared<SubRiemannianStructure>("sphere2", 2, 1, 2, make_source(SphereFrame{}, 2, 2, 0), chart);
  m.structure = s;
  m.descriptor.name = "sphere2";
  m.descriptor.certified = CDParameters::riemannian(1.0, 2);
  m.descriptor.box_center = {pi / 2.0, pi};
  m.descriptor.box_half_width = {pi / 2.0 - 0.25, pi};
  m.descriptor.notes = "chart (theta, phi) with theta in [0.1, pi - 0.1]";
  m.descriptor.compact = true;
  m.descriptor.total_volume = 4.0 * pi;
  m.descriptor.closure = {ChartAxis{0.0, pi, 0.0}, ChartAxis{0.0, 2.0 * pi, 2.0 * pi}};
  return m;
}

Model su2() {
  Model m;
  Chart chart({ChartAxis{0.0, pi / 2.0, 0.0}, ChartAxis{0.0, 2.0 * pi, 2.0 * pi}, ChartAxis{0.0, 2.0 * pi, 2.0 * pi}});
  auto s = std::make_shared<SubRiemannianStructure>("su2", 2, 2, 3, make_source(SU2Frame{}, 3, 2, 1), chart);
  s->set_group(su2_group());
  m.structure = s;
  m.descriptor.name = "su2";
  m.descriptor.certified = CDParameters::sub_riemannian(4.0, 1.0, 2.0, 2, 1);
  m.descriptor.box_center = {pi / 4.0, pi, pi};
  m.descriptor.box_half_width = {pi / 4.0 - 0.2, pi, pi};
  m.descriptor.notes = "Hopf chart (eta, xi1, xi2); frame singular at eta = 0 and eta = pi/2";
  m.descriptor.compact = true;
  m.descriptor.total_volume = 2.0 * pi * pi;
  m.descriptor.closure = {ChartAxis{0.0, pi / 2.0, 0.0}, ChartAxis{0.0, 2.0 * pi, 2.0 * pi},
                          ChartAxis{0.0, 2.0 * pi, 2.0 * pi}};
  return m;
}

}  // namespace

int free_step2_pair_index(int m, int n) {
  // pairs (0,1), (0,2), (1,2)
  return m == 0 ? n - 1 : 2;
}

Model build_model(const std::string& name) {
  static const std::regex with_arg(R"(([a-z0-9_]+)\((\d+)\))");
  std::smatch match;
  std::string base = name;
  int arg = -1;
  if (std::regex_match(name, match, with_arg)) {
    base = match[1];
    arg = std::stoi(match[2]);
  }
  if (base == "euclidean") {
    const int d = arg < 0 ? 2 : arg;
    if (d < 1) throw std::invalid_argument("euclidean needs d >= 1");
    return euclidean(d);
  }
  if (base == "heisenberg") {
    const int n = arg < 0 ? 1 : arg;
    if (n < 1) throw std::invalid_argument("heisenberg needs n >= 1");
    return heisenberg(n);
  }
  if (arg < 0) {
    if (base == "free_step2_d3") return free_step2_d3();
    if (base == "sphere2") return sphere2();
    if (base == "su2") return su2();
  }
  throw std::invalid_argument("unknown model '" + name + "'");
}

std::vector<std::string> builtin_model_names() {
  return {"euclidean", "heisenberg", "free_step2_d3", "sphere2", "su2"};
}

std::vector<ChartPoint> sample_points(const ModelDescriptor& m, int n, RandomStream& rng) {
  std::vector<ChartPoint> pts;
  pts.reserve(n);
  const std::size_t dim = m.box_center.size();
  for (int k = 0; k < n; ++k) {
    std::vector<double> x(dim);
    for (std::size_t a = 0; a < dim; ++a)
      x[a] = rng.uniform(m.box_center[a] - m.box_half_width[a], m.box_center[a] + m.box_half_width[a]);
    pts.emplace_back(std::move(x));
  }
  return pts;
}

}  // namespace srg
