#pragma once

// Named invariant suites (`ssplab verify <suite>`) and the twelve acceptance
// criteria.

#include <cstdint>
#include <string>
#include <vector>

namespace ssp::verify {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct SuiteReport {
  std::vector<CheckResult> checks;

  std::size_t failures() const;
  bool passed() const { return failures() == 0; }
};

/// ssp-core, sda-lemmas, estimation, polytope, evi-oracle, planning, learner.
const std::vector<std::string>& suite_names();

/// Runs one suite, or every suite for "all". Throws ConfigError on an unknown name.
SuiteReport run_suite(const std::string& name, std::uint64_t seed = 1);

/// `suite,check,status,value,threshold` rows; byte-stable for a given seed.
std::string report_csv(const SuiteReport& report);

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
};

inline constexpr int kCriterionCount = 12;

/// Runs acceptance criterion `id` in 1..12. `work_dir` receives the files
/// compared by the determinism criterion.
CriterionResult run_criterion(int id, const std::string& work_dir);

}  // namespace ssp::verify
