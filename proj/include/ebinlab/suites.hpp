#pragma once

// Reproduction suites. Each criterion runs a fixed experiment with pinned thresholds and
// reports the measured quantity next to the expected bound.
//
//   spd     C1 C2 C3
//   bounds  C5 C6 C7 C11 C12
//   torus   C4 C8 C9 C10

#include <cstdint>
#include <string>
#include <vector>

namespace ebinlab {

struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  std::string measured;
  std::string expected;
};

std::vector<std::string> suiteNames();

/// Criterion ids of a suite; throws PreconditionError for an unknown name.
std::vector<std::string> suiteCriteria(const std::string& suite);

/// `seed` shifts every random stream of the experiment; 0 reproduces the documented runs.
CriterionResult runCriterion(const std::string& id, std::uint64_t seed = 0);

std::vector<CriterionResult> runSuite(const std::string& suite, std::uint64_t seed = 0);

/// One line per criterion: PASS/FAIL, id, title, measured and expected values.
std::string formatTable(const std::vector<CriterionResult>& rows);

}  // namespace ebinlab
