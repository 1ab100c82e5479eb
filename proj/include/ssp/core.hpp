#pragma once

// Exact tabular stochastic-shortest-path mathematics.
//
// States are indexed 0..S-1. The goal is a virtual state with the sentinel
// index S; it never owns a transition row. Every row P[s][a] therefore has
// S + 1 entries, the last one being the probability of reaching the goal.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ssp {

/// Sup-norm change below which value iteration stops.
inline constexpr double kValueIterationTolerance = 1e-12;
/// Iteration cap of every value iteration on the base SSP.
inline constexpr std::size_t kValueIterationCap = 1'000'000;
/// Values beyond this magnitude are treated as divergence.
inline constexpr double kDivergenceThreshold = 1e9;
/// Tolerance for row sums of distributions.
inline constexpr double kDistributionTolerance = 1e-12;

class SspInstance {
 public:
  SspInstance() = default;

  /// `transition` is laid out as [s][a][s'] with s' in 0..S (S is the goal).
  SspInstance(std::size_t num_states, std::size_t num_actions, std::size_t init_state,
              std::vector<double> transition, std::string name = {});

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t init_state() const { return init_state_; }
  std::size_t goal() const { return num_states_; }
  const std::string& name() const { return name_; }

  /// Distribution over S ∪ {g} for the pair (s, a).
  std::span<const double> row(std::size_t s, std::size_t a) const {
    return {transition_.data() + (s * num_actions_ + a) * (num_states_ + 1), num_states_ + 1};
  }
  double prob(std::size_t s, std::size_t a, std::size_t next) const { return row(s, a)[next]; }

  const std::vector<double>& transition() const { return transition_; }

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t init_state_ = 0;
  std::vector<double> transition_;
  std::string name_;
};

/// Mean cost table c[s][a] in [c_min, 1].
class CostFunction {
 public:
  CostFunction() = default;
  CostFunction(std::size_t num_states, std::size_t num_actions, std::vector<double> values,
               double c_min = 0.0);

  static CostFunction constant(std::size_t num_states, std::size_t num_actions, double value);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double c_min() const { return c_min_; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * num_actions_ + a]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> values_;
  double c_min_ = 0.0;
};

/// Stationary randomized policy π[s] ∈ Δ_A.
class StationaryPolicy {
 public:
  StationaryPolicy() = default;
  StationaryPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs);

  static StationaryPolicy uniform(std::size_t num_states, std::size_t num_actions);
  static StationaryPolicy deterministic(std::size_t num_actions, const std::vector<std::size_t>& actions);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double operator()(std::size_t s, std::size_t a) const { return probs_[s * num_actions_ + a]; }
  std::span<const double> row(std::size_t s) const {
    return {probs_.data() + s * num_actions_, num_actions_};
  }
  const std::vector<double>& probs() const { return probs_; }

  bool is_deterministic() const;
  /// Action with the largest probability, smallest index on ties.
  std::size_t mode(std::size_t s) const;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> probs_;
};

struct PolicyValues {
  std::vector<double> v;  // per state
  std::vector<double> q;  // per (s, a), row-major
  std::size_t iterations = 0;

  double q_at(std::size_t s, std::size_t a, std::size_t num_actions) const {
    return q[s * num_actions + a];
  }
};

struct OptimalSolution {
  StationaryPolicy policy;
  std::vector<double> v;
  std::vector<double> q;
};

struct KeyParams {
  double b_star = 0.0;    // max_s V*(s)
  double t_star = 0.0;    // T^{π*}(s_init)
  double t_max = 0.0;     // max_s T^{π*}(s)
  double diameter = 0.0;  // max_s min_π T^π(s)
  StationaryPolicy optimal_policy;
  StationaryPolicy fast_policy;
};

/// True when every state reaches the goal with positive probability under `policy`.
bool is_proper(const SspInstance& instance, const StationaryPolicy& policy);

/// V and Q of a proper policy. Throws NonProperPolicy otherwise.
PolicyValues policy_evaluation(const SspInstance& instance, const StationaryPolicy& policy,
                               const CostFunction& cost);

/// Deterministic optimal proper policy with smallest-index tie breaking.
/// Throws NoProperPolicy when no proper policy exists.
OptimalSolution optimal_proper_policy(const SspInstance& instance, const CostFunction& cost);

/// One plus the expected number of steps to reach the goal, per state.
std::vector<double> hitting_time(const SspInstance& instance, const StationaryPolicy& policy);

/// B*, T*, Tmax, D and the fast policy. Throws AssumptionViolation when B* < 1.
KeyParams key_params(const SspInstance& instance, const CostFunction& cost);

/// Expected visits q(s, a) from `start` (defaults to the initial state).
std::vector<double> occupancy_measure(const SspInstance& instance, const StationaryPolicy& policy);
std::vector<double> occupancy_measure(const SspInstance& instance, const StationaryPolicy& policy,
                                      std::size_t start);

/// Sup norm of the Bellman residual of (v, q) for `policy`.
double bellman_residual(const SspInstance& instance, const StationaryPolicy& policy,
                        const CostFunction& cost, const PolicyValues& values);

// Serialization. Schema documented in README.md ("Instance files").
nlohmann::json instance_to_json(const SspInstance& instance, const CostFunction& cost);
std::pair<SspInstance, CostFunction> instance_from_json(const nlohmann::json& doc);

}  // namespace ssp
