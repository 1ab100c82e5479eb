#pragma once

// Parameterized property checks shared by the `verify` suites and the
// acceptance binary. Every check is deterministic in its seed.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssp/core.hpp"
#include "ssp/harness.hpp"
#include "ssp/layered.hpp"
#include "ssp/rng.hpp"

namespace ssp::verify {

/// Samples `n` transitions of every pair (n uniform in [min_n, max_n]) and
/// returns the resulting counters with the given log factor.
ConfidenceState sampled_confidence(const SspInstance& instance, double iota, std::size_t min_n, std::size_t max_n,
                                   Rng& rng);

/// Direct simulation of the stacked chain from the base rows.
class StackedSimulator {
 public:
  StackedSimulator(const SspInstance& base, double gamma, std::size_t horizon, const LayeredTable& pi,
                   const LayeredTable& cost);

  /// Total stacked cost of one episode from (start, layer 0). When `visited`
  /// is given, it receives the distinct triple indices taken in the episode.
  double run(Rng& rng, std::size_t start, std::vector<std::size_t>* visited = nullptr);

 private:
  const SspInstance* base_;
  double gamma_;
  std::size_t horizon_;
  const LayeredTable* pi_;
  const LayeredTable* cost_;
  std::vector<std::size_t> stamp_;
  std::size_t episode_ = 0;
};

/// Max over states of T^{π*} for the optimal proper policy of `cost`.
double optimal_t_max(const SspInstance& instance, const CostFunction& cost);

struct SdaBoundStats {
  std::size_t instances = 0;
  double value_slack = 1e300;  // min of bound − V over (instance, policy, s, l)
  double gap_slack = 1e300;    // min of Q* + c_f / 2^(H−l) − Q^{mirror}
  double decay_slack = 1e300;  // min of Tmax / 2^l − Σ q*(·, l)
  double oracle_error = 0.0;   // stacked evaluation vs dense solve
};
SdaBoundStats sda_bound_check(std::size_t instances, std::uint64_t seed);

struct OracleMatch {
  std::size_t cases = 0;
  double max_error = 0.0;   // worst |library − oracle|
  double max_excess = -1e300;  // worst error minus its tolerance
  std::size_t infeasible = 0;  // library points violating a constraint
};
OracleMatch evi_oracle_check(std::size_t instances, std::uint64_t seed);
OracleMatch polytope_oracle_check(std::size_t rows, std::uint64_t seed);
/// Dilated bonus against the robust vertex oracle with the max direction.
OracleMatch dilated_oracle_check(std::size_t instances, std::uint64_t seed);

struct CoverageStats {
  std::size_t runs = 0;
  std::size_t covered = 0;  // runs with the true transition in every set
  double fraction() const { return runs ? static_cast<double>(covered) / static_cast<double>(runs) : 0.0; }
};
CoverageStats coverage_check(std::size_t runs, std::size_t episodes, double delta, std::uint64_t seed);

struct VarianceStats {
  double analytic_variance = 0.0;
  double empirical_variance = 0.0;
  double relative_error = 0.0;
  double second_moment = 0.0;      // empirical E[X^2]
  double second_moment_bound = 0.0;  // 2 <q, c∘Q>
  double second_moment_se = 0.0;
};
VarianceStats variance_identity_check(std::size_t episodes, std::uint64_t seed);

struct DilatedBoundStats {
  std::size_t triples = 0;
  double min_slack = 1e300;  // min of 15 ρ_b (H − l)/(1 − γ) − B
  double min_dominance = 1e300;  // min of B − b
  double max_ratio = 0.0;         // max of B / bound on layers below H
  double terminal_max = 0.0;      // max of B on the terminal layer (bound 0)
};
DilatedBoundStats dilated_bound_check(std::size_t triples, std::uint64_t seed);

struct SandwichStats {
  std::size_t instances = 0;
  std::size_t skipped = 0;      // draws rejected because coverage failed
  std::size_t comparisons = 0;
  std::size_t violations = 0;
  double worst_z = 0.0;         // largest standardized excursion outside [x̲, x̄]
};
SandwichStats sandwich_check(std::size_t instances, std::size_t episodes, std::uint64_t seed);

struct HittingStats {
  std::size_t episodes = 0;
  double threshold = 0.0;  // 4 (H/(1−γ) + 1) ln(2/0.05)
  std::size_t exceed = 0;
  double limit = 0.0;      // 0.05 + 3 sd
  double fraction() const { return episodes ? static_cast<double>(exceed) / static_cast<double>(episodes) : 0.0; }
};
HittingStats hitting_time_check(std::size_t episodes, std::uint64_t seed);

/// Experiment used by the regret trend criteria.
ExperimentConfig regret_trend_config(Setting setting);

struct RegretTrend {
  std::size_t seeds = 0;
  std::size_t episodes = 0;
  double per_episode_early = 0.0;  // seed-mean R_250 / 250
  double per_episode_final = 0.0;  // seed-mean R_K / K
  double ratio = 0.0;
  double slope = 0.0;
  std::size_t failed_runs = 0;
};
RegretTrend regret_trend(const ExperimentConfig& config, std::size_t k_early);

}  // namespace ssp::verify
