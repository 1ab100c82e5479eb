#pragma once

// Instance generators, cost processes and the simulated environment.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssp/core.hpp"
#include "ssp/episode.hpp"
#include "ssp/learner.hpp"
#include "ssp/rng.hpp"

namespace ssp {

struct EnvSpec {
  std::string generator = "random-ssp";  // random-ssp | gridworld | line | file
  std::size_t num_states = 5;
  std::size_t num_actions = 2;
  std::size_t branching = 0;  // successors per row for random-ssp, 0 = all states
  std::size_t width = 3;      // gridworld
  std::size_t height = 2;
  double slip = 0.1;
  std::size_t length = 3;  // line
  std::string instance_path;  // generator == file
  double p_goal = 0.05;
  double c_min = 0.1;
  double uniform_cost = 0.0;           // > 0 fixes every mean cost to this value
  std::string cost_model = "bernoulli";  // bernoulli | uniform | fixed
  std::string adversary = "oblivious-switching";  // oblivious-switching | fixed-sequence
  std::size_t period = 2;
  std::vector<std::vector<double>> cost_tables;  // row-major S x A tables
  std::uint64_t seed = 0;
};

EnvSpec env_spec_from_json(const nlohmann::json& doc);
nlohmann::json env_spec_to_json(const EnvSpec& spec);

struct GeneratedEnv {
  SspInstance instance;
  CostFunction mean_cost;
  std::vector<CostFunction> adversary_tables;
  EnvSpec spec;
};

/// Deterministic in `spec.seed`. Retries with derived seeds when the instance
/// has no proper policy or violates B* >= 1; throws GenerationFailure after
/// `max_attempts`.
GeneratedEnv generate_instance(const EnvSpec& spec, std::size_t max_attempts = 100);

/// One draw of the cost model with mean `mean` on support [c_min, 1].
double sample_cost(const std::string& model, double mean, double c_min, Rng& rng);

class SimulatedEnvironment : public EpisodicEnvironment {
 public:
  SimulatedEnvironment(GeneratedEnv env, Setting setting, std::uint64_t seed);

  std::size_t num_states() const override { return env_.instance.num_states(); }
  std::size_t num_actions() const override { return env_.instance.num_actions(); }
  std::size_t current_state() const override { return state_; }
  bool at_goal() const override { return state_ == env_.instance.goal(); }

  void begin_episode(std::size_t k) override;
  StepOutcome step(std::size_t action) override;
  RevealedCosts reveal(const std::vector<std::pair<std::size_t, std::size_t>>& visited) override;

  /// c_k of the current (or last) episode in the adversary settings.
  const std::vector<double>& episode_costs() const { return episode_costs_; }
  /// Adversary table of episode k, independent of the learner.
  std::vector<double> adversary_costs(std::size_t k) const;

  const GeneratedEnv& generated() const { return env_; }
  Setting setting() const { return setting_; }
  std::size_t episode() const { return k_; }

 private:
  enum class Phase { Idle, Active, Finished, Revealed };

  GeneratedEnv env_;
  Setting setting_;
  std::uint64_t seed_;
  Rng transition_rng_;
  Rng cost_rng_;
  Phase phase_ = Phase::Idle;
  std::size_t k_ = 0;
  std::size_t state_ = 0;
  std::vector<double> episode_costs_;
};

}  // namespace ssp
