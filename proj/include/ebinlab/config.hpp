#pragma once

// Run configuration shared by the command-line tool and the reproduction suites.

#include "ebinlab/io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace ebinlab {

enum class OutputFormat { Json, Csv, Both };

OutputFormat parseOutputFormat(const std::string& s);
const char* label(OutputFormat f);

struct RunConfig {
  // grid used by generators
  std::vector<int> shape{8, 8};
  std::vector<double> period{1.0, 1.0};

  double eps_pd = 1e-10;
  double eps_psd = 1e-8;
  double delta_num = 1e-6;
  int quadrature_levels = 10;
  double quadrature_rel_tol = 1e-6;

  int polyline_nodes = 8;
  int polyline_iterations = 100;
  int tuning_budget = 20;
  int search_levels = 4;
  int theta_nodes = 16;

  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  OutputFormat format = OutputFormat::Json;

  /// Throws PreconditionError naming the first offending entry.
  void validate() const;

  TorusGrid grid() const { return {shape, period}; }
  Tolerances tolerances() const;
  DistanceOptions distanceOptions() const;
  OmegaOptions omegaOptions() const;
  EquivalenceOptions equivalenceOptions() const;
};

/// Keys missing from `j` keep their defaults; unknown keys are rejected.
RunConfig configFromJson(const Json& j);
RunConfig readConfig(const std::filesystem::path& file);
Json configToJson(const RunConfig& c);

}  // namespace ebinlab
