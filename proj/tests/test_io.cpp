#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "doctest.h"
#include "srgeom/bochner.hpp"
#include "srgeom/io.hpp"
#include "support.hpp"

using namespace srg;
using namespace srg::test;

namespace {

// The Heisenberg frame written out as polynomial tables.
const char* kCustomHeisenberg = R"({
  "format": "srs-v1",
  "name": "heisenberg-by-hand",
  "d": 2, "h": 2, "chart_dim": 3,
  "custom": {
    "frame": [
      [ [[[0,0,0], 1.0]], [], [[[0,1,0], -0.5]] ],
      [ [], [[[0,0,0], 1.0]], [[[1,0,0], 0.5]] ]
    ],
    "vertical": [ [ [], [], [[[0,0,0], 1.0]] ] ],
    "gamma": [ {"i": 0, "j": 1, "p": 0, "poly": [[[0,0,0], 0.5]]} ]
  },
  "box": {"center": [0, 0, 0], "half_width": [1, 1, 1]},
  "certified": {"rho1": 0.0, "rho2": 0.25, "kappa": 0.5}
})";

Model parse(const std::string& text) {
  std::istringstream is(text);
  return read_structure(is);
}

}  // namespace

TEST_CASE("a hand-written Heisenberg file behaves like the built-in model") {
  const Model m = parse(kCustomHeisenberg);
  const Model ref = build_model("heisenberg");
  CHECK(m.s().name() == "heisenberg-by-hand");
  CHECK(m.descriptor.has_certified);
  const auto pts = box_points(ref.descriptor, 10, 101);
  CHECK(validate_structure(m.s(), pts, 1e-10).pass);
  CHECK(certify_bounds(m.s(), pts, m.descriptor.certified, 1e-12).pass);
  for (std::uint64_t k = 0; k < 3; ++k) {
    const ScalarField f = ScalarField::polynomial("f", random_field(ref.descriptor, 3, 4, 101, k));
    for (const auto& x : pts) {
      CHECK(forms(m.s(), f, x).gamma2 == doctest::Approx(forms(ref.s(), f, x).gamma2).epsilon(1e-12));
      CHECK(std::abs(bochner_residuals(m.s(), f, x).horizontal) <= 1e-9);
    }
  }
}

TEST_CASE("structures round-trip through srs-v1") {
  const Model m = parse(kCustomHeisenberg);
  std::stringstream ss;
  write_structure(ss, m);
  const Model back = read_structure(ss);
  FrameSample<double> a, b;
  for (const auto& x : box_points(m.descriptor, 5, 102)) {
    m.s().evaluate(x.coords(), a);
    back.s().evaluate(x.coords(), b);
    CHECK(a.horizontal == b.horizontal);
    CHECK(a.vertical == b.vertical);
    CHECK(a.gamma == b.gamma);
    CHECK(a.density == b.density);
  }
  CHECK(back.descriptor.box_half_width == m.descriptor.box_half_width);
  CHECK(*back.descriptor.certified.rho2 == 0.25);

  for (const auto& name : builtin_model_names()) {
    std::stringstream bs;
    write_structure(bs, build_model(name));
    CHECK(read_structure(bs).descriptor.name == build_model(name).descriptor.name);
  }
}

TEST_CASE("malformed structure files raise FormatError") {
  CHECK_THROWS_AS(parse("not json"), FormatError);
  CHECK_THROWS_AS(parse(R"({"format": "srs-v2", "model": "heisenberg"})"), FormatError);
  CHECK_THROWS_AS(parse(R"({"format": "srs-v1", "model": "torus"})"), FormatError);
  CHECK_THROWS_AS(parse(R"({"format": "srs-v1", "model": "heisenberg", "d": 3})"), FormatError);
  CHECK_THROWS_AS(parse(R"({"format": "srs-v1", "d": 2, "h": 2, "chart_dim": 3})"), FormatError);
  CHECK_THROWS_AS(parse(R"({"format": "srs-v1", "d": 2, "h": 2, "chart_dim": 3, "custom": {"frame": [[]]}})"),
                  FormatError);
  CHECK_THROWS_AS(parse(R"({"format": "srs-v1", "d": 2, "h": 2, "chart_dim": 3, "custom": {"frame": [
      [[[[0,0,0], 1.0]], [], []], [[], [[[0,0,0], 1.0]], []]],
      "gamma": [{"i": 0, "j": 5, "p": 0, "poly": []}]}})"),
                  FormatError);
  CHECK_THROWS_AS(parse(R"({"format": "srs-v1", "d": 2, "h": 2, "chart_dim": 3, "custom": {"frame": [
      [[[[0,0], 1.0]], [], []], [[], [[[0,0,0], 1.0]], []]]}})"),
                  FormatError);
  CHECK_THROWS_AS(read_structure_file("/nonexistent/structure.json"), FormatError);
}

TEST_CASE("test functions round-trip through testfn-v1") {
  const Polynomial p = poly(3, {{{2, 0, 1}, 1.5}, {{0, 1, 0}, -2.0}});
  std::stringstream ss;
  write_test_function(ss, "bump", p);
  const ScalarField f = read_test_function(ss);
  CHECK(f.id() == "bump");
  const std::vector<double> x{0.3, -0.4, 1.2};
  CHECK(f(std::span<const double>(x)) == doctest::Approx(eval(p, x)));

  std::istringstream bad(R"({"format": "testfn-v1", "nvars": 2, "poly": [[[1], 1.0]]})");
  CHECK_THROWS_AS(read_test_function(bad), FormatError);
}
