#pragma once

#include <cstddef>
#include <vector>

#include "ssp/core.hpp"
#include "ssp/episode.hpp"
#include "ssp/rng.hpp"

namespace ssp::test {

/// Samples transitions of a fixed instance and charges a constant cost that
/// is observed immediately.
class InstanceEnv : public EpisodeEnvironment {
 public:
  InstanceEnv(const SspInstance& instance, double cost, std::uint64_t seed)
      : instance_(&instance), cost_(cost), rng_(seed), state_(instance.init_state()) {}

  std::size_t num_states() const override { return instance_->num_states(); }
  std::size_t num_actions() const override { return instance_->num_actions(); }
  std::size_t current_state() const override { return state_; }
  bool at_goal() const override { return state_ == instance_->goal(); }
  StepOutcome step(std::size_t action) override {
    StepOutcome out;
    out.next = rng_.categorical(instance_->row(state_, action));
    out.incurred = cost_;
    out.observed = cost_;
    state_ = out.next;
    return out;
  }
  void reset() { state_ = instance_->init_state(); }

 private:
  const SspInstance* instance_;
  double cost_;
  Rng rng_;
  std::size_t state_;
};

inline EpisodeStep step_of(std::size_t s, std::size_t a, std::size_t next, double cost = 0.5,
                           bool pre_switch = true, bool observed = true, std::size_t layer = 0) {
  return EpisodeStep{s, a, layer, cost, next, pre_switch, observed};
}

}  // namespace ssp::test
