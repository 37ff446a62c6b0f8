// Runs every acceptance criterion with pinned thresholds; one PASS/FAIL line each.

#include "ebinlab/suites.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

int main(int argc, char** argv) {
  std::vector<std::string> ids;
  for (int i = 1; i < argc; ++i) ids.emplace_back(argv[i]);
  if (ids.empty())
    for (const auto& suite : {"spd", "bounds", "torus"})
      for (const auto& id : ebinlab::suiteCriteria(suite)) ids.push_back(id);
  // criterion order C1 .. C12
  std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
    return std::stoi(a.substr(1)) < std::stoi(b.substr(1));
  });
  int failed = 0;
  for (const auto& id : ids) {
    const auto r = ebinlab::runCriterion(id);
    failed += !r.pass;
    std::fputs(ebinlab::formatTable({r}).c_str(), stdout);
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed == 0 ? 0 : 1;
}
