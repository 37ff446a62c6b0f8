#include "ebinlab/config.hpp"

namespace ebinlab {

OutputFormat parseOutputFormat(const std::string& s) {
  if (s == "json") return OutputFormat::Json;
  if (s == "csv") return OutputFormat::Csv;
  if (s == "both") return OutputFormat::Both;
  throw PreconditionError("unknown output format \"" + s + "\" (json, csv, both)");
}

const char* label(OutputFormat f) {
  switch (f) {
    case OutputFormat::Json: return "json";
    case OutputFormat::Csv: return "csv";
    default: return "both";
  }
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw PreconditionError(std::string("config: ") + name + " must be positive");
  };
  auto at_least = [](int v, int lo, const char* name) {
    if (v < lo) throw PreconditionError(std::string("config: ") + name + " must be at least " + std::to_string(lo));
  };
  positive(eps_pd, "eps_pd");
  positive(eps_psd, "eps_psd");
  positive(delta_num, "delta_num");
  positive(quadrature_rel_tol, "quadrature_rel_tol");
  at_least(quadrature_levels, 1, "quadrature_levels");
  at_least(polyline_nodes, 0, "polyline_nodes");
  at_least(polyline_iterations, 1, "polyline_iterations");
  at_least(tuning_budget, 5, "tuning_budget");  // s = 0, s_min, 1 and two golden-section probes
  at_least(search_levels, 1, "search_levels");
  at_least(theta_nodes, 1, "theta_nodes");
  (void)grid();
}

Tolerances RunConfig::tolerances() const {
  Tolerances t;
  t.eps_pd = eps_pd;
  t.eps_psd = eps_psd;
  return t;
}

DistanceOptions RunConfig::distanceOptions() const {
  DistanceOptions o;
  o.tol = tolerances();
  o.length.tol = o.tol;
  o.length.max_levels = quadrature_levels;
  o.length.rel_tol = quadrature_rel_tol;
  o.polyline_nodes = polyline_nodes;
  o.polyline.max_iterations = polyline_iterations;
  o.tuning_budget = tuning_budget;
  o.search_levels = search_levels;
  return o;
}

OmegaOptions RunConfig::omegaOptions() const {
  OmegaOptions o;
  o.distance = distanceOptions();
  o.dichotomy.delta_num = delta_num;
  o.theta.interior_nodes = theta_nodes;
  o.theta.tol = tolerances();
  return o;
}

EquivalenceOptions RunConfig::equivalenceOptions() const {
  EquivalenceOptions o;
  o.omega = omegaOptions();
  return o;
}

RunConfig configFromJson(const Json& j) {
  if (!j.is_object()) throw ParseError("config: expected an object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    auto num = [&] { return numberFrom(v, "config " + key); };
    auto integer = [&] {
      if (!v.is_number_integer()) throw ParseError("config: " + key + " must be an integer");
      return v.get<int>();
    };
    if (key == "grid") {
      const TorusGrid g = gridFromJson(v);
      c.shape = g.shape(), c.period = g.period();
    } else if (key == "eps_pd") c.eps_pd = num();
    else if (key == "eps_psd") c.eps_psd = num();
    else if (key == "delta_num") c.delta_num = num();
    else if (key == "quadrature_levels") c.quadrature_levels = integer();
    else if (key == "quadrature_rel_tol") c.quadrature_rel_tol = num();
    else if (key == "polyline_nodes") c.polyline_nodes = integer();
    else if (key == "polyline_iterations") c.polyline_iterations = integer();
    else if (key == "tuning_budget") c.tuning_budget = integer();
    else if (key == "search_levels") c.search_levels = integer();
    else if (key == "theta_nodes") c.theta_nodes = integer();
    else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ParseError("config: seed must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "out") {
      c.out = v.get<std::string>();
    } else if (key == "format") {
      c.format = parseOutputFormat(v.get<std::string>());
    } else {
      throw ParseError("config: unknown key \"" + key + "\"");
    }
  }
  c.validate();
  return c;
}

RunConfig readConfig(const std::filesystem::path& file) {
  try {
    return configFromJson(readJsonFile(file));
  } catch (const Json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
}

Json configToJson(const RunConfig& c) {
  Json j;
  j["grid"] = gridToJson(c.grid());
  j["eps_pd"] = c.eps_pd;
  j["eps_psd"] = c.eps_psd;
  j["delta_num"] = c.delta_num;
  j["quadrature_levels"] = c.quadrature_levels;
  j["quadrature_rel_tol"] = c.quadrature_rel_tol;
  j["polyline_nodes"] = c.polyline_nodes;
  j["polyline_iterations"] = c.polyline_iterations;
  j["tuning_budget"] = c.tuning_budget;
  j["search_levels"] = c.search_levels;
  j["theta_nodes"] = c.theta_nodes;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["format"] = label(c.format);
  return j;
}

}  // namespace ebinlab
