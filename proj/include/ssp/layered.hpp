#pragma once

// Dense tables over (state, action, layer) for the stacked MDP.
//
// Layers are 0-based in code: layer l corresponds to h = l + 1, and the last
// layer (index H) is the terminal layer that jumps to the goal. State-valued
// tables use a single action column.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ssp/core.hpp"

namespace ssp {

class LayeredTable {
 public:
  LayeredTable() = default;
  LayeredTable(std::size_t num_states, std::size_t num_actions, std::size_t num_layers, double fill = 0.0)
      : num_states_(num_states),
        num_actions_(num_actions),
        num_layers_(num_layers),
        data_(num_states * num_actions * num_layers, fill) {}

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t num_layers() const { return num_layers_; }

  std::size_t index(std::size_t s, std::size_t a, std::size_t l) const {
    return (l * num_states_ + s) * num_actions_ + a;
  }
  double& operator()(std::size_t s, std::size_t a, std::size_t l) { return data_[index(s, a, l)]; }
  double operator()(std::size_t s, std::size_t a, std::size_t l) const { return data_[index(s, a, l)]; }

  /// Per-state entry of a single-column table.
  double& at(std::size_t s, std::size_t l) { return data_[index(s, 0, l)]; }
  double at(std::size_t s, std::size_t l) const { return data_[index(s, 0, l)]; }

  std::span<double> row(std::size_t s, std::size_t l) { return {data_.data() + index(s, 0, l), num_actions_}; }
  std::span<const double> row(std::size_t s, std::size_t l) const {
    return {data_.data() + index(s, 0, l), num_actions_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
  }

  bool same_shape(const LayeredTable& other) const {
    return num_states_ == other.num_states_ && num_actions_ == other.num_actions_ &&
           num_layers_ == other.num_layers_;
  }

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t num_layers_ = 0;
  std::vector<double> data_;
};

/// Uniform layered policy over `horizon + 1` layers.
inline LayeredTable uniform_layered_policy(std::size_t num_states, std::size_t num_actions, std::size_t horizon) {
  return LayeredTable(num_states, num_actions, horizon + 1, 1.0 / static_cast<double>(num_actions));
}

/// Copies π into every layer 0..horizon.
inline LayeredTable mirror_policy(const StationaryPolicy& pi, std::size_t horizon) {
  LayeredTable out(pi.num_states(), pi.num_actions(), horizon + 1);
  for (std::size_t l = 0; l <= horizon; ++l)
    for (std::size_t s = 0; s < pi.num_states(); ++s)
      for (std::size_t a = 0; a < pi.num_actions(); ++a) out(s, a, l) = pi(s, a);
  return out;
}

/// Explicit stacked transition. For every non-terminal layer l < H and pair
/// (s, a) it stores 2S + 1 entries: stay mass to (s', l), advance mass to
/// (s', l + 1), and the goal mass. The terminal layer always jumps to the goal.
class LayeredKernel {
 public:
  LayeredKernel() = default;
  LayeredKernel(std::size_t num_states, std::size_t num_actions, std::size_t horizon)
      : num_states_(num_states),
        num_actions_(num_actions),
        horizon_(horizon),
        rows_(horizon * num_states * num_actions * (2 * num_states + 1), 0.0) {}

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t row_size() const { return 2 * num_states_ + 1; }

  std::span<double> row(std::size_t s, std::size_t a, std::size_t l) {
    return {rows_.data() + offset(s, a, l), row_size()};
  }
  std::span<const double> row(std::size_t s, std::size_t a, std::size_t l) const {
    return {rows_.data() + offset(s, a, l), row_size()};
  }
  void fill_row(std::size_t s, std::size_t a, std::size_t l, std::span<double> out) const {
    auto r = row(s, a, l);
    std::copy(r.begin(), r.end(), out.begin());
  }

 private:
  std::size_t offset(std::size_t s, std::size_t a, std::size_t l) const {
    return ((l * num_states_ + s) * num_actions_ + a) * row_size();
  }

  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t horizon_ = 0;
  std::vector<double> rows_;
};

}  // namespace ssp
