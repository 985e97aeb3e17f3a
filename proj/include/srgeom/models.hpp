#pragma once

#include <memory>
#include <string>
#include <vector>

#include "srgeom/cdconstants.hpp"
#include "srgeom/structure.hpp"

namespace srg {

class RandomStream;

struct ModelDescriptor {
  std::string name;
  CDParameters certified;
  /// False for structures read from files without certified constants.
  bool has_certified = true;
  /// Sampling box: center +- half_width per coordinate.
  std::vector<double> box_center;
  std::vector<double> box_half_width;
  std::string notes;
  bool compact = false;
  /// mu(M) for compact models, 0 otherwise.
  double total_volume = 0.0;
  /// Closure of the chart used by grid solvers on compact models: poles and
  /// periodic seams included.
  std::vector<ChartAxis> closure;
};

struct Model {
  std::shared_ptr<const SubRiemannianStructure> structure;
  ModelDescriptor descriptor;

  const SubRiemannianStructure& s() const { return *structure; }
};

/// Accepts euclidean, euclidean(d), heisenberg, heisenberg(n), free_step2_d3,
/// sphere2 and su2. Throws std::invalid_argument for anything else.
Model build_model(const std::string& name);

/// The five models used by the verification suites.
std::vector<std::string> builtin_model_names();

/// Uniform points in the reference box, wrapped into the chart.
std::vector<ChartPoint> sample_points(const ModelDescriptor& m, int n, RandomStream& rng);

/// Left-invariant coefficients of the free step-two group on three generators.
/// Exposed for tests that rebuild the frame by hand.
int free_step2_pair_index(int m, int n);

}  // namespace srg
