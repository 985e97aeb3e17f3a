#include "srgeom/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace srg {

using nlohmann::json;

namespace {

Polynomial poly_from_json(const json& j, int nvars) {
  const json* terms = &j;
  std::vector<double> center, scale;
  if (j.is_object()) {
    terms = &j.at("terms");
    if (j.contains("center")) center = j.at("center").get<std::vector<double>>();
    if (j.contains("scale")) scale = j.at("scale").get<std::vector<double>>();
  }
  if (!terms->is_array()) throw FormatError("polynomial must be a list of [exponents, coefficient] pairs");
  std::vector<Monomial> mons;
  for (const json& t : *terms) {
    if (!t.is_array() || t.size() != 2) throw FormatError("polynomial term must be [exponents, coefficient]");
    Monomial m;
    m.exps = t[0].get<std::vector<int>>();
    m.coef = t[1].get<double>();
    if (static_cast<int>(m.exps.size()) != nvars) throw FormatError("polynomial term has the wrong arity");
    for (int e : m.exps)
      if (e < 0 || e > 64) throw FormatError("polynomial exponent out of range");
    if (!std::isfinite(m.coef)) throw FormatError("polynomial coefficient is not finite");
    mons.push_back(std::move(m));
  }
  Polynomial p(nvars, std::move(mons));
  if (!center.empty() || !scale.empty()) {
    if (static_cast<int>(center.size()) != nvars || static_cast<int>(scale.size()) != nvars)
      throw FormatError("polynomial center/scale need one entry per variable");
    for (double sc : scale)
      if (!(sc != 0.0) || !std::isfinite(sc)) throw FormatError("polynomial scale must be finite and nonzero");
    p.set_affine(center, scale);
  }
  return p;
}

json poly_to_json(const Polynomial& p) {
  json terms = json::array();
  for (const Monomial& m : p.terms()) terms.push_back(json::array({m.exps, m.coef}));
  if (p.center().empty()) return terms;
  return json{{"center", p.center()}, {"scale", p.scale()}, {"terms", terms}};
}

int index_in(const json& e, const char* key, int bound) {
  const int k = e.at(key).get<int>();
  if (k < 0 || k >= bound) throw FormatError(std::string("index '") + key + "' out of range");
  return k;
}

template <class T>
void fill_from(const PolynomialTables& t, std::span<const T> x, FrameSample<T>& out) {
  auto eval = [&](const Polynomial& p) { return p.is_zero() ? constant_like(x[0], 0.0) : p(x); };
  for (std::size_t k = 0; k < t.horizontal.size(); ++k) out.horizontal[k] = eval(t.horizontal[k]);
  for (std::size_t k = 0; k < t.vertical.size(); ++k) out.vertical[k] = eval(t.vertical[k]);
  for (std::size_t k = 0; k < t.omega.size(); ++k) out.omega[k] = eval(t.omega[k]);
  for (std::size_t k = 0; k < t.gamma.size(); ++k) out.gamma[k] = eval(t.gamma[k]);
  for (std::size_t k = 0; k < t.delta.size(); ++k) out.delta[k] = eval(t.delta[k]);
  out.density = eval(t.density);
}

Model custom_model(const json& doc, const std::string& name, int d, int h, int dim) {
  const json& c = doc.at("custom");
  const int v = h * (h - 1) / 2;
  PolynomialTables t(dim, d, v);

  const json& frame = c.at("frame");
  if (!frame.is_array() || static_cast<int>(frame.size()) != d) throw FormatError("frame needs d rows");
  for (int i = 0; i < d; ++i) {
    if (!frame[i].is_array() || static_cast<int>(frame[i].size()) != dim)
      throw FormatError("frame rows need chart_dim polynomials");
    for (int a = 0; a < dim; ++a) t.horizontal[i * dim + a] = poly_from_json(frame[i][a], dim);
  }
  const json vertical = c.value("vertical", json::array());
  if (static_cast<int>(vertical.size()) != v) throw FormatError("vertical needs h(h-1)/2 rows");
  for (int p = 0; p < v; ++p) {
    if (!vertical[p].is_array() || static_cast<int>(vertical[p].size()) != dim)
      throw FormatError("vertical rows need chart_dim polynomials");
    for (int a = 0; a < dim; ++a) t.vertical[p * dim + a] = poly_from_json(vertical[p][a], dim);
  }
  for (const json& e : c.value("omega", json::array())) {
    const int i = index_in(e, "i", d), j = index_in(e, "j", d), l = index_in(e, "l", d);
    if (i == j) throw FormatError("omega entries need i != j");
    const Polynomial p = poly_from_json(e.at("poly"), dim);
    t.omega[(i * d + j) * d + l] = p;
    t.omega[(j * d + i) * d + l] = p * -1.0;
  }
  for (const json& e : c.value("gamma", json::array())) {
    const int i = index_in(e, "i", d), j = index_in(e, "j", d), p = index_in(e, "p", v);
    if (i == j) throw FormatError("gamma entries need i != j");
    const Polynomial q = poly_from_json(e.at("poly"), dim);
    t.gamma[(i * d + j) * v + p] = q;
    t.gamma[(j * d + i) * v + p] = q * -1.0;
  }
  for (const json& e : c.value("delta", json::array())) {
    const int i = index_in(e, "i", d), p = index_in(e, "p", v), l = index_in(e, "l", d);
    t.delta[(i * v + p) * d + l] = poly_from_json(e.at("poly"), dim);
  }
  t.density = c.contains("density") ? poly_from_json(c.at("density"), dim) : Polynomial::constant(dim, 1.0);

  Chart chart = Chart::unbounded(dim);
  if (c.contains("chart")) {
    std::vector<ChartAxis> axes;
    for (const json& ax : c.at("chart")) {
      ChartAxis a;
      a.lower = ax.value("lower", a.lower);
      a.upper = ax.value("upper", a.upper);
      a.period = ax.value("period", 0.0);
      if (!(a.lower < a.upper) || a.period < 0.0) throw FormatError("invalid chart axis");
      axes.push_back(a);
    }
    if (static_cast<int>(axes.size()) != dim) throw FormatError("chart needs chart_dim axes");
    chart = Chart(std::move(axes));
  }

  Model m;
  m.structure = std::make_shared<SubRiemannianStructure>(name, d, h, dim,
                                                         std::make_shared<PolynomialSource>(std::move(t)), chart);
  m.descriptor.name = name;
  m.descriptor.box_center.assign(dim, 0.0);
  m.descriptor.box_half_width.assign(dim, 1.0);
  if (doc.contains("box")) {
    m.descriptor.box_center = doc.at("box").at("center").get<std::vector<double>>();
    m.descriptor.box_half_width = doc.at("box").at("half_width").get<std::vector<double>>();
    if (static_cast<int>(m.descriptor.box_center.size()) != dim ||
        static_cast<int>(m.descriptor.box_half_width.size()) != dim)
      throw FormatError("box needs chart_dim entries");
  }
  m.descriptor.has_certified = doc.contains("certified");
  if (m.descriptor.has_certified) {
    const json& cert = doc.at("certified");
    const double rho1 = cert.at("rho1").get<double>();
    try {
      if (v == 0 || !cert.contains("rho2") || cert.at("rho2").is_null())
        m.descriptor.certified = CDParameters::riemannian(rho1, d);
      else
        m.descriptor.certified =
            CDParameters::sub_riemannian(rho1, cert.at("rho2").get<double>(), cert.value("kappa", 0.0), d, v);
    } catch (const DomainError& e) {
      throw FormatError(std::string("invalid certified constants: ") + e.what());
    }
  } else {
    m.descriptor.certified = CDParameters::riemannian(0.0, d);
  }
  m.descriptor.notes = doc.value("notes", std::string("custom polynomial structure"));
  return m;
}

}  // namespace

PolynomialTables::PolynomialTables(int dim_, int d_, int v_)
    : dim(dim_), d(d_), v(v_),
      horizontal(static_cast<std::size_t>(d_) * dim_, Polynomial(dim_)),
      vertical(static_cast<std::size_t>(v_) * dim_, Polynomial(dim_)),
      omega(static_cast<std::size_t>(d_) * d_ * d_, Polynomial(dim_)),
      gamma(static_cast<std::size_t>(d_) * d_ * v_, Polynomial(dim_)),
      delta(static_cast<std::size_t>(d_) * v_ * d_, Polynomial(dim_)),
      density(Polynomial::constant(dim_, 1.0)) {}

void PolynomialSource::evaluate(std::span<const double> x, FrameSample<double>& out) const {
  out.reset(t_.dim, t_.d, t_.v, 0.0);
  fill_from(t_, x, out);
}

void PolynomialSource::evaluate(std::span<const Jet> x, FrameSample<Jet>& out) const {
  out.reset(t_.dim, t_.d, t_.v, constant_like(x[0], 0.0));
  fill_from(t_, x, out);
}

Model read_structure(std::istream& is) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError(std::string("structure file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != "srs-v1")
      throw FormatError("structure file must declare format srs-v1");
    if (doc.contains("model")) {
      Model m;
      try {
        m = build_model(doc.at("model").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
      }
      if (doc.contains("d") && doc.at("d").get<int>() != m.s().d()) throw FormatError("d disagrees with the model");
      if (doc.contains("chart_dim") && doc.at("chart_dim").get<int>() != m.s().dim())
        throw FormatError("chart_dim disagrees with the model");
      return m;
    }
    const int d = doc.at("d").get<int>();
    const int h = doc.at("h").get<int>();
    const int dim = doc.at("chart_dim").get<int>();
    if (d < 1 || h < 1 || dim < d || dim > 32 || d > 16 || h > 16) throw FormatError("implausible dimensions");
    if (!doc.contains("custom")) throw FormatError("structure file needs 'model' or 'custom'");
    return custom_model(doc, doc.value("name", std::string("custom")), d, h, dim);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed structure file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed structure file: ") + e.what());
  }
}

Model read_structure_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open structure file '" + path + "'");
  return read_structure(in);
}

void write_structure(std::ostream& os, const Model& m) {
  const SubRiemannianStructure& s = m.s();
  json doc{{"format", "srs-v1"}, {"name", s.name()}, {"d", s.d()}, {"h", s.h()}, {"chart_dim", s.dim()}};
  const auto* poly = dynamic_cast<const PolynomialSource*>(&s.source());
  if (!poly) {
    doc["model"] = m.descriptor.name;
    os << doc.dump(2) << "\n";
    return;
  }
  const PolynomialTables& t = poly->tables();
  const int d = t.d, v = t.v, dim = t.dim;
  json c;
  c["frame"] = json::array();
  for (int i = 0; i < d; ++i) {
    json row = json::array();
    for (int a = 0; a < dim; ++a) row.push_back(poly_to_json(t.horizontal[i * dim + a]));
    c["frame"].push_back(row);
  }
  c["vertical"] = json::array();
  for (int p = 0; p < v; ++p) {
    json row = json::array();
    for (int a = 0; a < dim; ++a) row.push_back(poly_to_json(t.vertical[p * dim + a]));
    c["vertical"].push_back(row);
  }
  c["omega"] = json::array();
  c["gamma"] = json::array();
  c["delta"] = json::array();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      for (int l = 0; l < d; ++l)
        if (!t.omega[(i * d + j) * d + l].is_zero())
          c["omega"].push_back({{"i", i}, {"j", j}, {"l", l}, {"poly", poly_to_json(t.omega[(i * d + j) * d + l])}});
      for (int p = 0; p < v; ++p)
        if (!t.gamma[(i * d + j) * v + p].is_zero())
          c["gamma"].push_back({{"i", i}, {"j", j}, {"p", p}, {"poly", poly_to_json(t.gamma[(i * d + j) * v + p])}});
    }
  for (int i = 0; i < d; ++i)
    for (int p = 0; p < v; ++p)
      for (int l = 0; l < d; ++l)
        if (!t.delta[(i * v + p) * d + l].is_zero())
          c["delta"].push_back({{"i", i}, {"p", p}, {"l", l}, {"poly", poly_to_json(t.delta[(i * v + p) * d + l])}});
  c["density"] = poly_to_json(t.density);
  json chart = json::array();
  for (const ChartAxis& ax : s.chart().axes()) chart.push_back({{"lower", ax.lower}, {"upper", ax.upper}, {"period", ax.period}});
  c["chart"] = chart;
  doc["custom"] = c;
  doc["box"] = {{"center", m.descriptor.box_center}, {"half_width", m.descriptor.box_half_width}};
  if (m.descriptor.has_certified) {
    const CDParameters& p = m.descriptor.certified;
    json cert{{"rho1", p.rho1}, {"kappa", p.kappa}};
    cert["rho2"] = p.rho2 ? json(*p.rho2) : json(nullptr);
    doc["certified"] = cert;
  }
  doc["notes"] = m.descriptor.notes;
  os << doc.dump(2) << "\n";
}

ScalarField read_test_function(std::istream& is) {
  try {
    const json doc = json::parse(is);
    if (!doc.is_object() || doc.value("format", std::string()) != "testfn-v1")
      throw FormatError("test-function file must declare format testfn-v1");
    const int n = doc.at("nvars").get<int>();
    if (n < 1 || n > 32) throw FormatError("implausible nvars");
    return ScalarField::polynomial(doc.value("name", std::string("testfn")), poly_from_json(doc.at("poly"), n));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed test-function file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed test-function file: ") + e.what());
  }
}

void write_test_function(std::ostream& os, const std::string& id, const Polynomial& p) {
  const json doc{{"format", "testfn-v1"}, {"name", id}, {"nvars", p.nvars()}, {"poly", poly_to_json(p)}};
  os << doc.dump(2) << "\n";
}

}  // namespace srg
