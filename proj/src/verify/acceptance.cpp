#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ssp/errors.hpp"
#include "ssp/harness.hpp"
#include "ssp/verify/checks.hpp"
#include "ssp/verify/suites.hpp"

namespace ssp::verify {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

CriterionResult regret_criterion(int id, Setting setting, double budget) {
  Timer t;
  const auto config = regret_trend_config(setting);
  const auto trend = regret_trend(config, 250);
  const double secs = t.seconds();
  CriterionResult r{id, "regret sublinearity, " + to_string(setting), false, ""};
  r.pass = trend.failed_runs == 0 && trend.per_episode_early > 0.0 && trend.ratio <= 0.6 && trend.slope < 0.95 &&
           secs < budget;
  r.detail = fmt("R250/250=%.4g RK/K=%.4g ratio=%.3f slope=%.3f", trend.per_episode_early, trend.per_episode_final,
                 trend.ratio, trend.slope) +
             fmt(" failed_runs=%.0f time=%.1fs", static_cast<double>(trend.failed_runs), secs);
  return r;
}

CriterionResult determinism_criterion(const std::string& work_dir) {
  namespace fs = std::filesystem;
  Timer t;
  CriterionResult r{12, "determinism of verify and run outputs", true, ""};
  std::string first_verify;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = fs::path(work_dir) / ("rep" + std::to_string(rep));
    fs::create_directories(dir);
    const auto csv = report_csv(run_suite("all", 1));
    write_text_file((dir / "verify.csv").string(), csv);
    ExperimentConfig config;
    config.env.num_states = 5;
    config.env.num_actions = 3;
    config.env.p_goal = 0.1;
    config.env.seed = 3;
    config.episodes = 200;
    config.seeds = {1, 2};
    config.parallel = 2;
    config.out_dir = (dir / "run").string();
    run_experiment(config, true);
  }
  std::size_t compared = 0;
  for (const char* name : {"verify.csv", "run/episodes.csv", "run/summary.csv", "run/regret.svg"}) {
    const auto a = slurp(fs::path(work_dir) / "rep0" / name);
    const auto b = slurp(fs::path(work_dir) / "rep1" / name);
    if (a.empty() || a != b) r.pass = false;
    ++compared;
  }
  r.detail = fmt("%.0f files compared byte-for-byte, time=%.1fs", static_cast<double>(compared), t.seconds());
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, const std::string& work_dir) {
  Timer t;
  switch (id) {
    case 1: {
      const auto s = sda_bound_check(50, 1);
      const double secs = t.seconds();
      return {1, "stacked approximation value and gap bounds", s.value_slack >= -1e-8 && s.gap_slack >= -1e-8 &&
                                                                    secs < 60.0,
              fmt("instances=%.0f value_slack=%.3g gap_slack=%.3g time=%.1fs", static_cast<double>(s.instances),
                  s.value_slack, s.gap_slack, secs)};
    }
    case 2: {
      const auto s = sda_bound_check(50, 1);
      return {2, "layer decay of the mirrored optimal occupancy", s.decay_slack >= -1e-8,
              fmt("instances=%.0f decay_slack=%.3g", static_cast<double>(s.instances), s.decay_slack)};
    }
    case 3: {
      const auto m = evi_oracle_check(20, 1);
      const double secs = t.seconds();
      return {3, "optimistic Q against vertex-enumerated members", m.max_excess <= 0.0 && secs < 120.0,
              fmt("instances=%.0f max_error=%.3g tolerance=1e-6+1/K time=%.1fs", static_cast<double>(m.cases),
                  m.max_error, secs)};
    }
    case 4: {
      const auto m = polytope_oracle_check(1000, 1);
      return {4, "greedy polytope optimizer against vertex enumeration", m.max_error <= 1e-9 && m.infeasible == 0,
              fmt("rows=%.0f max_error=%.3g infeasible=%.0f", static_cast<double>(m.cases), m.max_error,
                  static_cast<double>(m.infeasible))};
    }
    case 5: {
      const auto c = coverage_check(200, 200, 0.1, 1);
      const double secs = t.seconds();
      return {5, "confidence set coverage", c.fraction() >= 0.85 && secs < 300.0,
              fmt("covered=%.0f/%.0f fraction=%.3f time=%.1fs", static_cast<double>(c.covered),
                  static_cast<double>(c.runs), c.fraction(), secs)};
    }
    case 6: {
      const auto v = variance_identity_check(100000, 1);
      const double excess = v.second_moment - v.second_moment_bound - 3.0 * v.second_moment_se;
      return {6, "variance identity and second moment bound", v.relative_error <= 0.05 && excess <= 0.0,
              fmt("analytic=%.5g empirical=%.5g rel_error=%.4f second_moment_excess=%.3g", v.analytic_variance,
                  v.empirical_variance, v.relative_error, excess)};
    }
    case 7: {
      const auto d = dilated_bound_check(100, 1);
      return {7, "dilated bonus magnitude bound", d.min_slack >= -1e-8 && d.terminal_max <= 1e-8,
              fmt("triples=%.0f min_slack=%.4g max_B_over_bound=%.4g terminal_max=%.3g",
                  static_cast<double>(d.triples), d.min_slack, d.max_ratio, d.terminal_max)};
    }
    case 8: {
      const auto s = sandwich_check(20, 100000, 1);
      return {8, "visit probability sandwich", s.instances == 20 && s.violations == 0,
              fmt("instances=%.0f comparisons=%.0f violations=%.0f worst_z=%.3g", static_cast<double>(s.instances),
                  static_cast<double>(s.comparisons), static_cast<double>(s.violations), s.worst_z)};
    }
    case 9: return regret_criterion(9, Setting::StochasticCosts, 600.0);
    case 10: return regret_criterion(10, Setting::AdvFull, 900.0);
    case 11: {
      const auto h = hitting_time_check(10000, 1);
      return {11, "hitting time concentration", h.fraction() < h.limit,
              fmt("threshold=%.1f exceed_fraction=%.4f limit=%.4f", h.threshold, h.fraction(), h.limit)};
    }
    case 12: return determinism_criterion(work_dir);
    default: throw InvalidArgument("acceptance criterion id out of range");
  }
}

}  // namespace ssp::verify
