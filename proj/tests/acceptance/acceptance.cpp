// Runs the twelve acceptance criteria and prints one PASS/FAIL line each.
// Usage: acceptance [work_dir] [criterion ids...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "ssp/verify/suites.hpp"

int main(int argc, char** argv) {
  const std::string work_dir = argc > 1 ? argv[1] : "acceptance_work";
  std::vector<int> ids;
  for (int i = 2; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (int id = 1; id <= ssp::verify::kCriterionCount; ++id) ids.push_back(id);

  int failed = 0;
  for (int id : ids) {
    const auto start = std::chrono::steady_clock::now();
    ssp::verify::CriterionResult r;
    try {
      r = ssp::verify::run_criterion(id, work_dir);
    } catch (const std::exception& e) {
      r = {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %2d: %s [%s] (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(),
                r.detail.c_str(), secs);
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(ids.size()) - failed, ids.size());
  return failed == 0 ? 0 : 1;
}
