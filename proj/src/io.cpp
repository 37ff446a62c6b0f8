#include "ebinlab/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ebinlab {

namespace {

const Json& member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing \"" + key + "\"");
  return *it;
}

std::vector<double> numberList(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(numberFrom(v, what));
  return out;
}

std::vector<int> intList(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParseError(what + ": expected integers");
    out.push_back(v.get<int>());
  }
  return out;
}

Json doubles(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

FieldKind kindFrom(const Json& j) {
  if (!j.is_string()) throw ParseError("field: \"kind\" must be a string");
  const auto s = j.get<std::string>();
  if (s == "metric") return FieldKind::Metric;
  if (s == "semimetric") return FieldKind::Semimetric;
  throw ParseError("field: unknown kind \"" + s + "\"");
}

TensorField<double> tensorsFromJson(const Json& j, const TorusGrid& grid) {
  const Json& values = member(j, "values", "field");
  if (!values.is_array()) throw ParseError("field: \"values\" must be an array");
  if (values.size() != grid.size())
    throw ShapeMismatchError("field: " + std::to_string(values.size()) + " nodes listed, grid has " +
                             std::to_string(grid.size()));
  std::vector<SymMat<double>> out;
  out.reserve(values.size());
  for (const auto& node : values) out.push_back(SymMat<double>::fromPacked(grid.dim(), numberList(node, "field values")));
  return {grid, std::move(out)};
}

// A field given inline or as a file name relative to base.
Json fieldObject(const Json& j, const std::filesystem::path& base) {
  if (j.is_string()) return readJsonFile(base / j.get<std::string>());
  return j;
}

}  // namespace

Json parseJson(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto byte = static_cast<long long>(e.byte);
    throw ParseError(origin + ": malformed JSON at byte offset " + std::to_string(byte) + ": " + e.what(), byte);
  }
}

Json readJsonFile(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw PreconditionError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseJson(ss.str(), file.string());
}

void writeTextFile(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw PreconditionError("cannot write " + file.string());
  out << text;
}

Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double numberFrom(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ParseError(what + ": expected a number");
}

Json gridToJson(const TorusGrid& g) {
  return Json{{"dim", g.dim()}, {"shape", g.shape()}, {"period", doubles(g.period())}};
}

TorusGrid gridFromJson(const Json& j) {
  auto shape = intList(member(j, "shape", "grid"), "grid shape");
  auto period = j.contains("period") ? numberList(j["period"], "grid period") : std::vector<double>(shape.size(), 1.0);
  if (j.contains("dim") && (!j["dim"].is_number_integer() || j["dim"].get<std::size_t>() != shape.size()))
    throw ShapeMismatchError("grid: \"dim\" does not match the shape");
  return {std::move(shape), std::move(period)};
}

Json tensorFieldToJson(const TensorField<double>& f, FieldKind kind) {
  Json j = gridToJson(f.grid());
  j["kind"] = label(kind);
  Json values = Json::array();
  for (const auto& m : f.values()) {
    Json node = Json::array();
    for (int i = 0; i < m.packed().size(); ++i) node.push_back(number(m.packed()(i)));
    values.push_back(std::move(node));
  }
  j["values"] = std::move(values);
  return j;
}

Json fieldToJson(const MetricField<double>& f) { return tensorFieldToJson(f, f.kind()); }

MetricField<double> fieldFromJson(const Json& j, const Tolerances& tol) {
  const TorusGrid grid = gridFromJson(j);
  const FieldKind kind = kindFrom(member(j, "kind", "field"));
  return {tensorsFromJson(j, grid), kind, tol};
}

MetricField<double> readField(const std::filesystem::path& file, const Tolerances& tol) {
  return fieldFromJson(readJsonFile(file), tol);
}

void writeField(const std::filesystem::path& file, const MetricField<double>& f) {
  writeTextFile(file, fieldToJson(f).dump() + "\n");
}

Json scalarFieldToJson(const ScalarField<double>& f) {
  Json j = gridToJson(f.grid);
  j["values"] = doubles(f.values);
  return j;
}

ScalarField<double> scalarFieldFromJson(const Json& j) {
  ScalarField<double> f{gridFromJson(j), numberList(member(j, "values", "scalar field"), "scalar field values")};
  if (f.values.size() != f.grid.size()) throw ShapeMismatchError("scalar field: value count does not match grid");
  return f;
}

Json pathToJson(const MetricPath<double>& p) {
  Json j;
  j["kind"] = kindName(p);
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, LinearPath<double>>) {
          j["g0"] = tensorFieldToJson(q.g0, FieldKind::Semimetric);
          j["g1"] = tensorFieldToJson(q.g1, FieldKind::Semimetric);
        } else if constexpr (std::is_same_v<T, ConformalGeodesicPath<double>>) {
          j["g0"] = tensorFieldToJson(q.g0, FieldKind::Metric);
          j["rho"] = scalarFieldToJson(q.rho);
        } else if constexpr (std::is_same_v<T, ConformalExpPath<double>>) {
          j["g0"] = tensorFieldToJson(q.g0, FieldKind::Metric);
          j["sigma_from"] = scalarFieldToJson(q.sigma_from);
          j["sigma_to"] = scalarFieldToJson(q.sigma_to);
        } else if constexpr (std::is_same_v<T, ThreePiecePath<double>>) {
          j["g0"] = tensorFieldToJson(q.g0, FieldKind::Semimetric);
          j["g1"] = tensorFieldToJson(q.g1, FieldKind::Semimetric);
          Json region = Json::array();
          for (std::size_t i = 0; i < q.region.grid().size(); ++i) region.push_back(q.region[i] ? 1 : 0);
          j["region"] = std::move(region);
          j["s"] = number(q.s);
          j["w"] = number(q.w);
        } else {
          j["t"] = doubles(q.t);
          Json fields = Json::array();
          for (const auto& f : q.fields) fields.push_back(tensorFieldToJson(f, FieldKind::Semimetric));
          j["fields"] = std::move(fields);
        }
      },
      p);
  return j;
}

MetricPath<double> pathFromJson(const Json& j, const std::filesystem::path& base, const Tolerances& tol) {
  const Json& kind_json = member(j, "kind", "path");
  if (!kind_json.is_string()) throw ParseError("path: \"kind\" must be a string");
  const std::string kind = kind_json.get<std::string>();
  // endpoints of straight and three-piece paths may be semidefinite
  auto semi = [&](const char* key) -> TensorField<double> {
    return fieldFromJson(fieldObject(member(j, key, "path"), base), tol);
  };
  auto metric = [&](const char* key) -> TensorField<double> {
    const auto f = fieldFromJson(fieldObject(member(j, key, "path"), base), tol);
    if (f.kind() != FieldKind::Metric) throw PreconditionError(std::string("path: \"") + key + "\" must be a metric");
    return f;
  };
  auto scalar = [&](const char* key) { return scalarFieldFromJson(fieldObject(member(j, key, "path"), base)); };

  if (kind == "linear") return LinearPath<double>{semi("g0"), semi("g1")};
  if (kind == "boundary_shift") return boundaryShiftPath<double>(semi("g0"), numberFrom(member(j, "delta", "path"), "delta"));
  if (kind == "conformal_geodesic") {
    auto g0 = metric("g0");
    auto rho = scalar("rho");
    requireSameGrid(g0.grid(), rho.grid, "path");
    return ConformalGeodesicPath<double>{std::move(g0), std::move(rho)};
  }
  if (kind == "conformal_exp") {
    auto g0 = metric("g0");
    auto from = scalar("sigma_from"), to = scalar("sigma_to");
    requireSameGrid(g0.grid(), from.grid, "path");
    requireSameGrid(g0.grid(), to.grid, "path");
    return ConformalExpPath<double>{std::move(g0), std::move(from), std::move(to)};
  }
  if (kind == "three_piece") {
    const auto g0 = semi("g0"), g1 = semi("g1");
    const auto bits = intList(member(j, "region", "path"), "region");
    if (bits.size() != g0.grid().size()) throw ShapeMismatchError("path: region size does not match grid");
    const auto region = RegionMask::where(g0.grid(), [&](std::size_t i) { return bits[i] != 0; });
    return threePiecePath<double>(g0, g1, region, numberFrom(member(j, "s", "path"), "s"),
                                  numberFrom(member(j, "w", "path"), "w"));
  }
  if (kind == "sampled") {
    const auto t = numberList(member(j, "t", "path"), "t");
    const Json& fields = member(j, "fields", "path");
    if (!fields.is_array() || fields.size() != t.size())
      throw ParseError("path: \"fields\" must list one field per entry of \"t\"");
    SampledPath<double> p;
    p.t = t;
    for (const auto& f : fields) p.fields.push_back(fieldFromJson(fieldObject(f, base), tol));
    for (const auto& f : p.fields) requireSameGrid(p.fields.front().grid(), f.grid(), "path");
    return p;
  }
  throw ParseError("path: unknown kind \"" + kind + "\"");
}

SequenceManifest manifestFromJson(const Json& j, const std::filesystem::path& base) {
  SequenceManifest m;
  if (j.contains("precision")) {
    const auto p = j["precision"].is_string() ? j["precision"].get<std::string>() : std::string();
    if (p != "double" && p != "extended") throw ParseError("manifest: precision must be \"double\" or \"extended\"");
    m.extended = p == "extended";
  }
  const Json& list = member(j, "sequences", "manifest");
  if (!list.is_array() || list.empty()) throw ParseError("manifest: \"sequences\" must be a non-empty array");
  for (const auto& s : list) {
    SequenceSpec spec;
    spec.name = member(s, "name", "manifest").get<std::string>();
    if (s.contains("k")) {
      const Json& k = s["k"];
      if (k.is_array()) {
        spec.k = numberList(k, "k");
      } else if (k.is_object() && (k.contains("geometric") || k.contains("linear"))) {
        const bool geo = k.contains("geometric");
        const auto r = intList(k[geo ? "geometric" : "linear"], "k range");
        if (r.size() != 2 || r[0] > r[1]) throw ParseError("manifest: k range must be [first, last]");
        for (int e = r[0]; e <= r[1]; ++e) spec.k.push_back(geo ? std::pow(4.0, e) : e);
      } else {
        throw ParseError("manifest: \"k\" must be a list or a range object");
      }
    }
    if (s.contains("generator")) {
      spec.generator = parseSequenceKind(s["generator"].get<std::string>());
      spec.grid = gridFromJson(member(s, "grid", "manifest"));
      if (spec.k.empty()) throw ParseError("manifest: generator sequence \"" + spec.name + "\" needs \"k\"");
    } else {
      const Json& files = member(s, "fields", "manifest");
      if (!files.is_array()) throw ParseError("manifest: \"fields\" must be an array of file names");
      for (const auto& f : files) spec.files.push_back(base / f.get<std::string>());
      if (!spec.k.empty() && spec.k.size() != spec.files.size())
        throw ParseError("manifest: \"k\" and \"fields\" differ in length for \"" + spec.name + "\"");
    }
    m.sequences.push_back(std::move(spec));
  }
  return m;
}

SequenceManifest readManifest(const std::filesystem::path& file) {
  try {
    return manifestFromJson(readJsonFile(file), file.parent_path());
  } catch (const Json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
}

template <typename Scalar>
std::vector<MetricSequence<Scalar>> loadSequences(const SequenceManifest& m, const Tolerances& tol) {
  std::vector<MetricSequence<Scalar>> out;
  for (const auto& spec : m.sequences) {
    MetricSequence<Scalar> seq;
    if (spec.generator) {
      seq = exampleSequence<Scalar>(*spec.generator, spec.grid, spec.k);
    } else {
      for (const auto& f : spec.files) seq.terms.push_back(readField(f, tol).template cast<Scalar>());
      seq.k_values = spec.k;
    }
    seq.validate();
    if (!out.empty() && !(out.front().grid() == seq.grid()))
      throw ShapeMismatchError("manifest: sequence \"" + spec.name + "\" uses a different grid");
    out.push_back(std::move(seq));
  }
  return out;
}

template std::vector<MetricSequence<double>> loadSequences(const SequenceManifest&, const Tolerances&);
template std::vector<MetricSequence<long double>> loadSequences(const SequenceManifest&, const Tolerances&);

}  // namespace ebinlab
