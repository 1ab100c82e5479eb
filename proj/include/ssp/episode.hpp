#pragma once

// Episode-level interface shared by the SDA executor and the simulators.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ssp {

struct StepOutcome {
  std::size_t next = 0;          // next state, or S for the goal
  double incurred = 0.0;         // cost actually paid (bookkeeping only)
  std::optional<double> observed;  // what the learner sees right away
};

/// A goal-terminated environment driven one action at a time.
class EpisodeEnvironment {
 public:
  virtual ~EpisodeEnvironment() = default;
  virtual std::size_t num_states() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual std::size_t current_state() const = 0;
  virtual bool at_goal() const = 0;
  virtual StepOutcome step(std::size_t action) = 0;
};

struct EpisodeStep {
  std::size_t state = 0;
  std::size_t action = 0;
  std::size_t layer = 0;  // 0-based; layer l is h = l + 1
  double cost = 0.0;      // incurred cost
  std::size_t next = 0;
  bool pre_switch = true;
  bool observed = false;  // cost visible to the learner during the step
};

struct EpisodeLog {
  std::size_t episode = 0;
  std::vector<EpisodeStep> steps;
  std::size_t pre_switch_steps = 0;  // J_k
  bool switched = false;
  std::size_t switch_state = 0;
  double terminal_cost = 0.0;
  double incurred_cost = 0.0;  // all environment costs, fast-policy steps included
  double stacked_cost = 0.0;   // pre-switch costs plus the terminal cost

  std::size_t length() const { return steps.size(); }
};

/// Costs revealed after an episode. `full` is set under full information,
/// `visited` holds the revealed pairs under bandit feedback.
struct RevealedCosts {
  std::optional<std::vector<double>> full;
  std::map<std::pair<std::size_t, std::size_t>, double> visited;
};

/// Environment with episode boundaries and post-episode cost disclosure.
class EpisodicEnvironment : public EpisodeEnvironment {
 public:
  virtual void begin_episode(std::size_t k) = 0;
  /// Closes the finished episode; `visited` lists the pre-switch pairs.
  virtual RevealedCosts reveal(const std::vector<std::pair<std::size_t, std::size_t>>& visited) = 0;
};

/// Distinct pre-switch (s, a) pairs of a log, in first-visit order.
std::vector<std::pair<std::size_t, std::size_t>> pre_switch_pairs(const EpisodeLog& log);

/// One-line text record: `k J switched switch_state terminal | s,a,l,cost,next,p,o;...`
std::string format_episode_log(const EpisodeLog& log);
EpisodeLog parse_episode_log(const std::string& line);

}  // namespace ssp
