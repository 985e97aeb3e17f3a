#include "srgeom/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>

#include "srgeom/rng.hpp"

namespace srg {

namespace {

// Node lattice of the grid: periodic axes have `cells` nodes, closed axes
// `cells + 1` (both ends included).
struct Lattice {
  std::vector<int> cells, nodes;
  std::vector<double> lower, step;
  std::vector<bool> periodic;

  Lattice(std::span<const ChartAxis> domain, std::span<const int> c) {
    for (std::size_t a = 0; a < domain.size(); ++a) {
      if (c[a] < 2) throw DomainError("grid needs at least two cells per axis");
      const bool per = domain[a].period > 0.0;
      const double len = per ? domain[a].period : domain[a].upper - domain[a].lower;
      if (!(len > 0.0) || !std::isfinite(len)) throw DomainError("grid axes must be bounded");
      cells.push_back(c[a]);
      nodes.push_back(per ? c[a] : c[a] + 1);
      lower.push_back(domain[a].lower);
      step.push_back(len / c[a]);
      periodic.push_back(per);
    }
  }

  int dim() const { return static_cast<int>(cells.size()); }
  int node_count() const {
    int n = 1;
    for (int k : nodes) n *= k;
    return n;
  }
  int element_count() const {
    int n = 1;
    for (int k : cells) n *= k;
    return n;
  }
  int flat(std::span<const int> idx) const {
    int f = 0;
    for (int a = 0; a < dim(); ++a) {
      int j = idx[a];
      if (periodic[a]) j %= nodes[a];
      f = f * nodes[a] + j;
    }
    return f;
  }
};

}  // namespace

GridConfig default_grid(const ModelDescriptor& m) {
  GridConfig cfg;
  if (m.closure.size() == 2) cfg.cells = {16, 32};
  else if (m.closure.size() == 3) cfg.cells = {6, 12, 12};
  else cfg.cells.assign(m.closure.size(), 8);
  return cfg;
}

GridEigenvalue lambda1_on_grid(const SubRiemannianStructure& s, std::span<const ChartAxis> domain,
                               std::span<const int> cells, const GridConfig& cfg) {
  if (static_cast<int>(domain.size()) != s.dim() || domain.size() != cells.size())
    throw StructuralError("grid needs one axis per chart coordinate");
  const Lattice lat(domain, cells);
  const int dim = lat.dim();
  const int d = s.d();
  const int n = lat.node_count();
  const int corners = 1 << dim;
  const double g = 0.5 / std::sqrt(3.0);

  std::vector<Eigen::Triplet<double>> trip, mtrip;
  trip.reserve(static_cast<std::size_t>(lat.element_count()) * corners * corners);
  mtrip.reserve(trip.capacity());
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
  double cell_volume = 1.0;
  for (double h : lat.step) cell_volume *= h;

  std::vector<int> elem(dim, 0), idx(dim), vnode(corners);
  std::vector<double> xq(dim), xi(dim);
  std::vector<double> phi(corners);
  std::vector<std::vector<double>> grad(corners, std::vector<double>(dim));
  std::vector<std::vector<double>> xphi(corners, std::vector<double>(d));
  FrameSample<double> fs;
  for (int e = 0; e < lat.element_count(); ++e) {
    for (int v = 0; v < corners; ++v) {
      for (int a = 0; a < dim; ++a) idx[a] = elem[a] + ((v >> a) & 1);
      vnode[v] = lat.flat(idx);
    }
    std::vector<double> local(static_cast<std::size_t>(corners) * corners, 0.0);
    std::vector<double> local_mass(local.size(), 0.0);
    for (int q = 0; q < corners; ++q) {
      for (int a = 0; a < dim; ++a) {
        xi[a] = 0.5 + (((q >> a) & 1) ? g : -g);
        xq[a] = lat.lower[a] + (elem[a] + xi[a]) * lat.step[a];
      }
      s.evaluate(std::span<const double>(xq), fs);
      const double w = cell_volume / corners * fs.density;
      for (int v = 0; v < corners; ++v) {
        double p = 1.0;
        for (int a = 0; a < dim; ++a) p *= ((v >> a) & 1) ? xi[a] : 1.0 - xi[a];
        phi[v] = p;
        for (int a = 0; a < dim; ++a) {
          double dp = (((v >> a) & 1) ? 1.0 : -1.0) / lat.step[a];
          for (int b = 0; b < dim; ++b)
            if (b != a) dp *= ((v >> b) & 1) ? xi[b] : 1.0 - xi[b];
          grad[v][a] = dp;
        }
        for (int i = 0; i < d; ++i) {
          double acc = 0.0;
          for (int a = 0; a < dim; ++a) acc += fs.X(i, a) * grad[v][a];
          xphi[v][i] = acc;
        }
        mass(vnode[v]) += w * phi[v];
      }
      for (int v = 0; v < corners; ++v)
        for (int u = 0; u < corners; ++u) {
          double acc = 0.0;
          for (int i = 0; i < d; ++i) acc += xphi[v][i] * xphi[u][i];
          local[v * corners + u] += w * acc;
          local_mass[v * corners + u] += w * phi[v] * phi[u];
        }
    }
    for (int v = 0; v < corners; ++v)
      for (int u = 0; u < corners; ++u) {
        trip.emplace_back(vnode[v], vnode[u], local[v * corners + u]);
        mtrip.emplace_back(vnode[v], vnode[u], local_mass[v * corners + u]);
      }
    for (int a = dim - 1; a >= 0; --a) {
      if (++elem[a] < lat.cells[a]) break;
      elem[a] = 0;
    }
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(mtrip.begin(), mtrip.end());
  for (int k = 0; k < n; ++k)
    if (!(mass(k) > 0.0)) throw StructuralError("grid node with zero mass");

  const Eigen::SparseMatrix<double> A = K + cfg.shift * M;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) throw StructuralError("grid operator factorization failed");

  // subspace iteration with Rayleigh-Ritz on the M-complement of constants;
  // M times the constant vector is the row-sum (lumped) mass
  const int m = std::min(8, n - 1);
  const double total_mass = mass.sum();
  auto deflate = [&](Eigen::MatrixXd& V) {
    for (int c = 0; c < V.cols(); ++c) {
      const double mean = mass.dot(V.col(c)) / total_mass;
      V.col(c).array() -= mean;
    }
  };
  RandomStream rng(cfg.seed, 0x6c616d62ULL);
  Eigen::MatrixXd V(n, m);
  for (int c = 0; c < m; ++c)
    for (int k = 0; k < n; ++k) V(k, c) = rng.normal();
  deflate(V);

  GridEigenvalue out;
  out.cells.assign(cells.begin(), cells.end());
  out.unknowns = n;
  double residual = 1e300;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    Eigen::MatrixXd MV = M * V;
    Eigen::MatrixXd W = solver.solve(MV);
    deflate(W);
    const Eigen::MatrixXd Kr = W.transpose() * (K * W);
    const Eigen::MatrixXd Mr = W.transpose() * (M * W);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (Kr + Kr.transpose()),
                                                                   0.5 * (Mr + Mr.transpose()));
    if (ritz.info() != Eigen::Success) throw StructuralError("Rayleigh-Ritz step failed");
    V = W * ritz.eigenvectors();
    const double lam = ritz.eigenvalues()(0);
    const Eigen::VectorXd v1 = V.col(0);
    const Eigen::VectorXd r = K * v1 - lam * (M * v1);
    const double rn = std::sqrt(r.cwiseProduct(r).cwiseQuotient(mass).sum());
    const double vn = std::sqrt(v1.dot(M * v1));
    residual = rn / vn;
    out.value = lam;
    out.iterations = it;
    out.residual = residual;
    if (residual <= cfg.tolerance * std::max(1.0, std::abs(lam))) return out;
    // keep the basis well conditioned
    for (int c = 0; c < m; ++c) V.col(c) /= std::max(V.col(c).norm(), 1e-300);
  }
  throw IterationLimitError("lambda1 inverse iteration did not converge", residual);
}

Lambda1Result lambda1_estimate(const Model& m, const GridConfig& cfg) {
  if (!m.descriptor.compact || m.descriptor.closure.empty())
    throw NotCompactError("lambda1 needs a compact model; '" + m.descriptor.name + "' is not compact");
  if (cfg.cells.size() != m.descriptor.closure.size())
    throw DomainError("grid needs one cell count per chart coordinate");
  Lambda1Result r;
  r.coarse = lambda1_on_grid(m.s(), m.descriptor.closure, cfg.cells, cfg);
  std::vector<int> fine(cfg.cells);
  for (int& c : fine) c *= 2;
  r.fine = lambda1_on_grid(m.s(), m.descriptor.closure, fine, cfg);
  r.value = (4.0 * r.fine.value - r.coarse.value) / 3.0;
  r.upper = r.fine.value;
  return r;
}

Lambda1Result lambda1_estimate(const Model& m) {
  if (!m.descriptor.compact) throw NotCompactError("lambda1 needs a compact model; '" + m.descriptor.name + "' is not compact");
  return lambda1_estimate(m, default_grid(m.descriptor));
}

}  // namespace srg
