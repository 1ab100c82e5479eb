#pragma once

// Experiment driver: configuration, seeded runs, regret against exact
// baselines, CSV and SVG output.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssp/env.hpp"
#include "ssp/learner.hpp"

namespace ssp {

struct ExperimentConfig {
  EnvSpec env;
  Setting setting = Setting::StochasticCosts;
  std::size_t episodes = 100;
  double delta = 0.1;
  std::vector<std::uint64_t> seeds{1};
  std::map<std::string, double> overrides;
  std::string out_dir = "out";
  std::size_t parallel = 1;
};

/// Throws ConfigError on unknown fields or invalid values.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits. The output
/// directory and the worker count do not enter the hash.
std::string config_hash(const ExperimentConfig& config);

struct SeedRun {
  std::uint64_t seed = 0;
  LearnerConfig learner;
  double baseline = 0.0;          // mean per-episode comparator value
  double stacked_baseline = 0.0;  // same for the stacked comparator
  std::vector<EpisodeRecord> records;
  std::vector<double> regret;          // cumulative R_k
  std::vector<double> stacked_regret;  // cumulative stacked regret
  std::string error;                   // non-empty when the run aborted
};

struct RegretReport {
  std::string config_hash;
  ExperimentConfig config;
  std::vector<SeedRun> runs;
};

/// Per-episode comparator values: V^{π*}(s_init) and the stacked value of
/// the mirrored policy, for each k = 1..K.
struct Comparators {
  std::vector<double> base;
  std::vector<double> stacked;
};
Comparators regret_comparators(const SimulatedEnvironment& env, const KeyParams& key, const SdaParams& sda,
                               Setting setting, std::size_t episodes);

/// Cost function the key parameters are computed from: the mean cost in the
/// stochastic settings, the average adversary table in the adversarial ones.
CostFunction reference_cost(const SimulatedEnvironment& env, Setting setting, std::size_t episodes);

/// Runs every seed. With `write_outputs`, writes episodes.csv, summary.csv and
/// regret.svg to config.out_dir (partial rows are flushed if a run aborts).
RegretReport run_experiment(const ExperimentConfig& config, bool write_outputs = true);

std::string episodes_csv(const RegretReport& report);
std::string summary_csv(const RegretReport& report);

struct RegretCurves {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> cumulative;  // one curve per seed, k = 1..K
};

RegretCurves curves_of(const RegretReport& report);
RegretCurves read_curves_csv(const std::string& path);

/// Self-contained SVG with cumulative and per-episode-average regret on
/// log-log axes: min/max band over seeds plus the seed mean.
std::string render_regret_svg(const RegretCurves& curves);

/// Least-squares slope of log R_k against log k over [k_lo, k_hi]. Points with
/// non-positive regret are skipped.
double loglog_slope(const std::vector<double>& cumulative, std::size_t k_lo, std::size_t k_hi);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ssp
