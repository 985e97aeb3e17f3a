#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "srgeom/calculus.hpp"
#include "srgeom/models.hpp"
#include "srgeom/polynomial.hpp"

namespace srg {

/// Frame, structure functions and density given by polynomial tables in the
/// chart coordinates. Entries not listed are zero.
struct PolynomialTables {
  int dim = 0, d = 0, v = 0;
  std::vector<Polynomial> horizontal;  // d * dim
  std::vector<Polynomial> vertical;    // v * dim
  std::vector<Polynomial> omega;       // d * d * d, same layout as FrameSample
  std::vector<Polynomial> gamma;       // d * d * v
  std::vector<Polynomial> delta;       // d * v * d
  Polynomial density;

  PolynomialTables() = default;
  PolynomialTables(int dim, int d, int v);
};

class PolynomialSource final : public StructureSource {
 public:
  explicit PolynomialSource(PolynomialTables t) : t_(std::move(t)) {}
  void evaluate(std::span<const double> x, FrameSample<double>& out) const override;
  void evaluate(std::span<const Jet> x, FrameSample<Jet>& out) const override;
  const PolynomialTables& tables() const { return t_; }

 private:
  PolynomialTables t_;
};

/// Reads an srs-v1 document. Built-in references ("model") resolve through
/// build_model; "custom" documents become a polynomial structure with a
/// descriptor taken from the optional "box" and "certified" fields.
Model read_structure(std::istream& is);
Model read_structure_file(const std::string& path);
/// Writes built-in models by name and polynomial structures as tables.
void write_structure(std::ostream& os, const Model& m);

/// testfn-v1: one polynomial field.
ScalarField read_test_function(std::istream& is);
void write_test_function(std::ostream& os, const std::string& id, const Polynomial& p);

}  // namespace srg
