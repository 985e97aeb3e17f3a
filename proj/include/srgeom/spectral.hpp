#pragma once

#include <cstdint>
#include <vector>

#include "srgeom/models.hpp"

namespace srg {

/// Tensor grid over the closure of a compact chart. `cells` is the coarse
/// resolution per axis; the fine level doubles every entry.
struct GridConfig {
  std::vector<int> cells;
  /// Shift sigma of the inverse iteration (K + sigma M)^{-1} M.
  double shift = 1.0;
  int max_iterations = 500;
  double tolerance = 1e-8;
  std::uint64_t seed = 1;
};

struct GridEigenvalue {
  std::vector<int> cells;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  int unknowns = 0;
};

struct Lambda1Result {
  /// Richardson extrapolation (4 fine - coarse) / 3.
  double value = 0.0;
  /// The fine-grid value. Conforming elements with a consistent mass matrix
  /// make it a Rayleigh-Ritz upper bound (up to quadrature error).
  double upper = 0.0;
  GridEigenvalue coarse;
  GridEigenvalue fine;
};

/// Default coarse grid for the built-in compact models.
GridConfig default_grid(const ModelDescriptor& m);

/// Smallest nonzero eigenvalue of -L on one grid. Trilinear (Q1) finite
/// elements with the energy sum_i (X_i u)^2 integrated against mu by
/// tensor Gauss rules, consistent mass, deflation of constants.
GridEigenvalue lambda1_on_grid(const SubRiemannianStructure& s, std::span<const ChartAxis> domain,
                               std::span<const int> cells, const GridConfig& cfg);

/// Throws NotCompactError for non-compact models and IterationLimitError
/// (with the last residual) when the iteration stalls.
Lambda1Result lambda1_estimate(const Model& m, const GridConfig& cfg);
Lambda1Result lambda1_estimate(const Model& m);

}  // namespace srg
