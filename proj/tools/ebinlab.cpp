// ebinlab command-line tool.
//
// Exit codes: 0 certified / all checks passed, 2 result not certified, 64 malformed input,
// 65 shape mismatch, 66 precondition failure, 1 anything else (including failed suites).

#include "ebinlab/config.hpp"
#include "ebinlab/report.hpp"
#include "ebinlab/suites.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

using namespace ebinlab;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
};

RunConfig resolve(const Globals& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : readConfig(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.out = g.out;
  if (!g.format.empty()) c.format = parseOutputFormat(g.format);
  c.validate();
  return c;
}

bool wantJson(const RunConfig& c) { return c.format != OutputFormat::Csv; }
bool wantCsv(const RunConfig& c) { return c.format != OutputFormat::Json; }

std::string csvLine(std::initializer_list<std::string> cells) {
  std::string s;
  for (const auto& c : cells) s += (s.empty() ? "" : ",") + c;
  return s + "\n";
}

std::string str(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

int cmdDistance(const RunConfig& c, const std::string& f0, const std::string& f1) {
  const auto tol = c.tolerances();
  const auto g0 = readField(f0, tol), g1 = readField(f1, tol);
  if (g0.kind() != FieldKind::Metric || g1.kind() != FieldKind::Metric)
    throw PreconditionError("distance: both fields must have kind \"metric\"");
  if (!(g0.grid() == g1.grid())) throw ShapeMismatchError("distance: the fields live on different grids");
  const auto e = estimate(g0, g1, c.distanceOptions());
  if (wantJson(c)) {
    Json j = reportHeader(c);
    j["inputs"] = Json{f0, f1};
    j["estimate"] = distanceJson(e, tol, true);
    writeTextFile(c.out / "distance.json", j.dump(2) + "\n");
  }
  if (wantCsv(c)) {
    std::string s = "lower,upper,certified,upper_family,lower_kind,lower_mask\n";
    s += csvLine({str(e.lower), str(e.upper), e.certified ? "1" : "0", e.upper_detail.best.family,
                  label(e.lower_witness.kind), e.lower_witness.mask});
    writeTextFile(c.out / "distance.csv", s);
  }
  std::printf("lower %.10g  upper %.10g  (%s, %s)\n", e.lower, e.upper, e.upper_detail.best.family.c_str(),
              e.certified ? "certified" : "not certified");
  return e.certified ? 0 : 2;
}

int cmdLength(const RunConfig& c, const std::string& file) {
  const std::filesystem::path p(file);
  const auto path = pathFromJson(readJsonFile(p), p.parent_path(), c.tolerances());
  PathLengthOptions opts = c.distanceOptions().length;
  const auto len = pathLength(path, opts);
  if (wantJson(c)) {
    Json j = reportHeader(c);
    j["input"] = file;
    j["length"] = lengthJson(len, kindName(path));
    writeTextFile(c.out / "length.json", j.dump(2) + "\n");
  }
  if (wantCsv(c)) {
    writeTextFile(c.out / "length.csv", "kind,length,error_estimate,levels,graded,converged\n" +
                                            csvLine({kindName(path), str(len.length), str(len.error_estimate),
                                                     std::to_string(len.levels), len.graded ? "1" : "0",
                                                     len.converged ? "1" : "0"}));
  }
  std::printf("length %.12g  (error %.3g, %s)\n", len.length, len.error_estimate,
              len.converged ? "converged" : "not converged");
  return len.converged ? 0 : 2;
}

template <typename Scalar>
int omegaRun(const RunConfig& c, const SequenceManifest& m, const std::string& file) {
  const auto seqs = loadSequences<Scalar>(m, c.tolerances());
  Json j = reportHeader(c);
  j["manifest"] = file;
  j["precision"] = m.extended ? "extended" : "double";
  Json diag;
  bool certified = true;
  std::vector<std::string> names;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const auto& name = m.sequences[s].name;
    names.push_back(name);
    const auto d = omegaReport(seqs[s], c.omegaOptions());
    certified = certified && d.certified;
    diag[name] = diagnosticsJson(d, seqs[s]);
    if (wantCsv(c))
      for (const auto& [csv, text] : diagnosticsCsv(d, seqs[s])) writeTextFile(c.out / (name + "_" + csv), text);
    std::printf("%-16s collapsed %zu  converged %zu  undecided %zu  sum of uppers %.6g\n", name.c_str(), d.counts[0],
                d.counts[1], d.counts[2], static_cast<double>(d.summability));
  }
  j["sequences"] = std::move(diag);
  if (seqs.size() > 1) {
    Json matrix = Json::array();
    for (std::size_t a = 0; a < seqs.size(); ++a)
      for (std::size_t b = a + 1; b < seqs.size(); ++b) {
        if (seqs[a].size() != seqs[b].size()) continue;
        const auto r = equivalenceTest(seqs[a], seqs[b], c.equivalenceOptions());
        for (const auto& e : r.termwise) certified = certified && e.certified;
        Json entry = equivalenceJson(r);
        entry["a"] = names[a];
        entry["b"] = names[b];
        matrix.push_back(std::move(entry));
        std::printf("%s ~ %s: %s (%s)\n", names[a].c_str(), names[b].c_str(), label(r.verdict), r.reason.c_str());
      }
    j["equivalence"] = std::move(matrix);
  }
  j["certified"] = certified;
  if (wantJson(c)) writeTextFile(c.out / "omega.json", j.dump(2) + "\n");
  if (wantCsv(c)) writeTextFile(c.out / "omega.gp", gnuplotScript(names));
  return certified ? 0 : 2;
}

int cmdOmega(const RunConfig& c, const std::string& file) {
  const auto m = readManifest(file);
  return m.extended ? omegaRun<long double>(c, m, file) : omegaRun<double>(c, m, file);
}

int cmdReproduce(const RunConfig& c, const std::string& suite) {
  const auto ids = suiteCriteria(suite);
  std::vector<CriterionResult> rows;
  for (const auto& id : ids) {
    rows.push_back(runCriterion(id, c.seed));
    std::fputs(formatTable({rows.back()}).c_str(), stdout);
    std::fflush(stdout);
  }
  bool ok = true;
  Json list = Json::array();
  for (const auto& r : rows) {
    ok = ok && r.pass;
    list.push_back(
        Json{{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"measured", r.measured}, {"expected", r.expected}});
  }
  if (wantJson(c)) {
    Json j = reportHeader(c);
    j["suite"] = suite;
    j["criteria"] = std::move(list);
    writeTextFile(c.out / ("reproduce_" + suite + ".json"), j.dump(2) + "\n");
  }
  if (wantCsv(c)) {
    std::string s = "id,pass,measured,expected\n";
    for (const auto& r : rows) s += r.id + "," + (r.pass ? "1" : "0") + ",\"" + r.measured + "\",\"" + r.expected + "\"\n";
    writeTextFile(c.out / ("reproduce_" + suite + ".csv"), s);
  }
  return ok ? 0 : 1;
}

int cmdGenerate(const RunConfig& c, const std::string& kind_name, double k, const std::string& file) {
  const auto kind = parseSequenceKind(kind_name);
  // extended precision keeps exp(k t) finite for g3 at large k; values are stored as doubles
  const auto f = exampleTerm<long double>(kind, c.grid(), k).cast<double>();
  std::filesystem::path target = file.empty() ? c.out / (kind_name + "_k" + str(k) + ".json") : std::filesystem::path(file);
  writeField(target, f);
  std::printf("wrote %s\n", target.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified distance bounds and completion diagnostics for the L2 metric on tori"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for every random stream (default 0)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"json", "csv", "both"}));

  std::string f0, f1, path_file, manifest, suite, kind, gen_file;
  double k = 0;
  auto* distance = app.add_subcommand("distance", "certified interval for d(g0, g1)");
  distance->add_option("g0", f0, "field file")->required();
  distance->add_option("g1", f1, "field file")->required();
  auto* length = app.add_subcommand("length", "L2 length of a serialized path");
  length->add_option("path", path_file, "path file")->required();
  auto* omega = app.add_subcommand("omega", "completion diagnostics for the sequences of a manifest");
  omega->add_option("manifest", manifest, "sequence manifest")->required();
  auto* reproduce = app.add_subcommand("reproduce", "run a built-in acceptance suite");
  reproduce->add_option("suite", suite, "spd, bounds or torus")->required();
  auto* generate = app.add_subcommand("generate", "write one term of a built-in generator");
  generate->add_option("kind", kind, "g1, g2, g3, g4, half_collapse or conformal")->required();
  generate->add_option("--k", k, "sequence parameter")->required();
  generate->add_option("--file", gen_file, "output file (default <out>/<kind>_k<k>.json)");
  for (auto* sub : {distance, length, omega, reproduce, generate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }

  try {
    const RunConfig c = resolve(g);
    if (*distance) return cmdDistance(c, f0, f1);
    if (*length) return cmdLength(c, path_file);
    if (*omega) return cmdOmega(c, manifest);
    if (*reproduce) return cmdReproduce(c, suite);
    if (*generate) return cmdGenerate(c, kind, k, gen_file);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 64;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 64;
  } catch (const ShapeMismatchError& e) {
    std::fprintf(stderr, "shape mismatch: %s\n", e.what());
    return 65;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "precondition failed: %s\n", e.what());
    return 66;
  } catch (const DegeneratePointError& e) {
    std::fprintf(stderr, "precondition failed: %s\n", e.what());
    return 66;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
