#pragma once

// Policy optimization with multiplicative weights over the stacked MDP, and
// the per-setting estimates fed into it.

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ssp/estimation.hpp"
#include "ssp/planning.hpp"
#include "ssp/sda.hpp"

namespace ssp {

enum class Setting { StochasticCosts, StochAdvFull, StochAdvBandit, AdvFull, AdvBandit };

std::string to_string(Setting setting);
Setting parse_setting(const std::string& name);
Feedback feedback_of(Setting setting);
bool is_adversarial(Setting setting);

struct Schedule {
  double eta = 0.0;
  double lambda = 0.0;
  double beta = 0.0;        // stochastic adversary, bandit
  double beta_prime = 0.0;  // stochastic adversary, full information
  double theta = 0.0;
  double l_prime = 0.0;     // L + c_f
  double iota = 1.0;
};

struct LearnerConfig {
  Setting setting = Setting::StochasticCosts;
  Schedule schedule;
  SdaParams sda;
  KeyParams key;
  double evi_epsilon = 1.0;
  bool check_schedule = true;
  bool full_info_all_pairs = true;
};

/// Default schedule for a setting.
Schedule default_schedule(Setting setting, std::size_t num_states, std::size_t num_actions, const SdaParams& sda,
                          const KeyParams& key);

/// Builds a config from (K, delta) and key parameters, then applies overrides.
/// Recognized keys: eta, lambda, beta, beta_prime, theta, l_prime, iota, gamma,
/// num_layers, terminal_cost, evi_epsilon, check_schedule, full_info_all_pairs.
LearnerConfig make_learner_config(Setting setting, std::size_t num_states, std::size_t num_actions,
                                  std::size_t episodes, double delta, const KeyParams& key,
                                  const std::map<std::string, double>& overrides = {});

/// π ∝ exp(−η Z) per (s, l) row, stabilized by the row minimum of Z.
LayeredTable policy_from_exponent(const LayeredTable& z, double eta);

/// π'(a|s,l) ∝ π(a|s,l) exp(−η loss(s,a,l)). With `check`, throws
/// ScheduleViolation when η ‖loss‖∞ > 1.
LayeredTable mwu_update(const LayeredTable& pi, const LayeredTable& loss, double eta, bool check = true);

struct EpisodeEstimates {
  LayeredTable q_hat;      // optimistic Q of the base cost estimate
  LayeredTable corrected;  // c̃
  LayeredTable q_tilde;
  LayeredTable bonus;      // B (zeros in the stochastic settings)
  LayeredTable b;          // per-step bonus before dilation
  std::size_t evi_sweeps = 0;
};

/// Correction e_k of the stochastic settings (zero on the terminal layer).
LayeredTable correction_term(const LearnerConfig& config, const std::vector<double>& chat, const LayeredTable& q_hat,
                             std::size_t k);

/// Stochastic costs and the two stochastic-adversary settings.
EpisodeEstimates stochastic_episode(const LearnerConfig& config, const LayeredTable& pi, const PolytopeSet& polytopes,
                                    const ConfidenceState& conf, std::size_t k);

/// Full-information adversary: revealed table `cost` (row-major S x A).
EpisodeEstimates adv_full_episode(const LearnerConfig& config, const LayeredTable& pi, const PolytopeSet& polytopes,
                                  const std::vector<double>& cost);

/// Total stacked cost from the first visit of each triple within the first
/// L + 1 stacked steps. Costs come from the bandit disclosure.
LayeredTable first_visit_cost(const LearnerConfig& config, const EpisodeLog& log, const RevealedCosts& revealed,
                              std::size_t num_states, std::size_t num_actions);

/// Bandit adversary: importance-weighted Q̃ and the visit-gap bonus.
EpisodeEstimates adv_bandit_episode(const LearnerConfig& config, const LayeredTable& pi, const PolytopeSet& polytopes,
                                    std::size_t start, const EpisodeLog& log, const RevealedCosts& revealed);

struct EpisodeRecord {
  std::size_t k = 0;
  double episode_cost = 0.0;
  double terminal_cost = 0.0;
  double stacked_cost = 0.0;
  std::size_t pre_switch_steps = 0;
  bool switched = false;
  std::size_t length = 0;
  double max_qtilde = 0.0;
  double max_bonus = 0.0;
};

class Learner {
 public:
  Learner(LearnerConfig config, std::size_t num_states, std::size_t num_actions, std::size_t init_state);

  const LearnerConfig& config() const { return config_; }
  const LayeredTable& policy() const { return pi_; }
  const LayeredTable& exponent() const { return z_; }
  const ConfidenceState& confidence() const { return conf_; }
  std::size_t episode() const { return k_; }

  /// Consumes episode k: estimates from the current confidence set, then the
  /// policy update, then the count update.
  EpisodeEstimates observe(const EpisodeLog& log, const RevealedCosts& revealed);

 private:
  LearnerConfig config_;
  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t init_state_;
  std::size_t k_ = 1;
  LayeredTable z_;
  LayeredTable pi_;
  ConfidenceState conf_;
};

using EpisodeCallback = std::function<void(const EpisodeRecord&, const EpisodeLog&)>;

/// Runs K episodes of the learner against `env`; `on_episode` sees every
/// finished episode as soon as the learner has consumed it.
void run_learner(const LearnerConfig& config, EpisodicEnvironment& env, std::size_t init_state, std::size_t episodes,
                 Rng& rng, const EpisodeCallback& on_episode);

std::vector<EpisodeRecord> run_learner(const LearnerConfig& config, EpisodicEnvironment& env, std::size_t init_state,
                                       std::size_t episodes, Rng& rng, std::vector<EpisodeLog>* logs = nullptr);

}  // namespace ssp
