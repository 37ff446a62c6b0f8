#pragma once

// JSON files for fields, paths and sequence manifests.
//
// Field file:
//   {"dim": n, "shape": [...], "period": [...], "kind": "metric" | "semimetric",
//    "values": [[upper-triangular entries of node 0], [node 1], ...]}
// Nodes are listed in row-major order (last axis fastest). Numbers are written in a decimal
// form that reads back to the same double.

#include "ebinlab/omega.hpp"
#include "ebinlab/path.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ebinlab {

using Json = nlohmann::ordered_json;

/// Parses text as JSON; syntax errors become ParseError carrying the byte offset.
Json parseJson(const std::string& text, const std::string& origin);
Json readJsonFile(const std::filesystem::path& file);
void writeTextFile(const std::filesystem::path& file, const std::string& text);

/// Finite values as numbers, non-finite ones as the strings "inf", "-inf", "nan".
Json number(double v);
double numberFrom(const Json& j, const std::string& what);

Json gridToJson(const TorusGrid& g);
TorusGrid gridFromJson(const Json& j);

Json fieldToJson(const MetricField<double>& f);
Json tensorFieldToJson(const TensorField<double>& f, FieldKind kind);
MetricField<double> fieldFromJson(const Json& j, const Tolerances& tol = {});
MetricField<double> readField(const std::filesystem::path& file, const Tolerances& tol = {});
void writeField(const std::filesystem::path& file, const MetricField<double>& f);

Json scalarFieldToJson(const ScalarField<double>& f);
ScalarField<double> scalarFieldFromJson(const Json& j);

/// {"kind": ..., parameters..., embedded fields}. Field entries may also be strings naming a
/// field file relative to `base`.
Json pathToJson(const MetricPath<double>& p);
MetricPath<double> pathFromJson(const Json& j, const std::filesystem::path& base = {}, const Tolerances& tol = {});

/// Sequence manifest:
///   {"precision": "double" | "extended",
///    "sequences": [{"name": ..., "generator": "g1", "grid": {...}, "k": [...]}
///                  | {"name": ..., "fields": ["a.json", ...], "k": [...]}]}
/// "k" may be replaced by {"geometric": [first, last]} or {"linear": [first, last]}.
struct SequenceSpec {
  std::string name;
  std::optional<SequenceKind> generator;
  TorusGrid grid;
  std::vector<double> k;
  std::vector<std::filesystem::path> files;
};

struct SequenceManifest {
  bool extended = false;
  std::vector<SequenceSpec> sequences;
};

SequenceManifest manifestFromJson(const Json& j, const std::filesystem::path& base);
SequenceManifest readManifest(const std::filesystem::path& file);

/// Builds the terms; throws ShapeMismatchError when sequences of one manifest disagree on the grid.
template <typename Scalar>
std::vector<MetricSequence<Scalar>> loadSequences(const SequenceManifest& m, const Tolerances& tol = {});

}  // namespace ebinlab
