#pragma once

// Stacked discounted approximation of an SSP.

#include <cstddef>
#include <span>

#include "ssp/core.hpp"
#include "ssp/episode.hpp"
#include "ssp/layered.hpp"
#include "ssp/rng.hpp"

namespace ssp {

struct SdaParams {
  double gamma = 0.5;
  std::size_t num_layers = 1;     // H
  double terminal_cost = 1.0;     // c_f
  double chi = 0.0;               // 2 H Tmax + c_f
  double step_cap = 0.0;          // L
  double dilation_horizon = 0.0;  // H'
  std::size_t episodes = 1;       // K
  double delta = 0.1;
  double t_max = 1.0;
};

/// Smallest H >= 1 with 2^H >= ceil(c_f) * K.
std::size_t layers_for(double terminal_cost, std::size_t episodes);

/// All SDA parameters from (K, delta, D, Tmax).
SdaParams sda_params(std::size_t episodes, double delta, double diameter, double t_max);

/// Recomputes chi, L and H' after gamma, H or c_f were overridden.
SdaParams rederive(SdaParams params);

/// Terminal cost recorded when the layer counter reaches H + 1 at `state`.
inline double terminal_cost_at(const SdaParams& params, std::size_t state, std::size_t goal) {
  return state == goal ? 0.0 : params.terminal_cost;
}

/// Lazy view of the stacked MDP; rows are computed from the base row and gamma.
class StackedMdp {
 public:
  StackedMdp(const SspInstance& base, double gamma, std::size_t horizon);
  StackedMdp(const SspInstance& base, const SdaParams& params)
      : StackedMdp(base, params.gamma, params.num_layers) {}

  std::size_t num_states() const { return base_->num_states(); }
  std::size_t num_actions() const { return base_->num_actions(); }
  std::size_t horizon() const { return horizon_; }
  double gamma() const { return gamma_; }
  const SspInstance& base() const { return *base_; }

  /// Writes the 2S + 1 entries (stay, advance, goal) of row (s, a, l), l < H.
  void fill_row(std::size_t s, std::size_t a, std::size_t l, std::span<double> out) const;

  /// Materialized copy, for tests and for comparison with planned kernels.
  LayeredKernel to_kernel() const;

 private:
  const SspInstance* base_;
  double gamma_;
  std::size_t horizon_;
};

/// c(s,a) on layers below H, c_f on the terminal layer.
LayeredTable stacked_cost(const CostFunction& cost, std::size_t horizon, double terminal_cost);

struct StackedValues {
  LayeredTable v;  // single action column
  LayeredTable q;
  std::size_t sweeps = 0;
};

/// Backward over layers, Gauss-Seidel fixed point within each layer.
template <class Kernel>
StackedValues stacked_policy_evaluation(const Kernel& kernel, const LayeredTable& pi, const LayeredTable& cost);

/// Expected visits q(s, a, l) starting from (start, layer 0).
template <class Kernel>
LayeredTable stacked_occupancy(const Kernel& kernel, const LayeredTable& pi, std::size_t start);

struct VisitReturn {
  double visit = 0.0;   // probability that (s, a, l) is ever taken
  double ret = 0.0;     // probability of taking it again after taking it once
};

/// Ever-visit and return probabilities of a stacked triple, by reach recursion.
template <class Kernel>
VisitReturn visit_and_return(const Kernel& kernel, const LayeredTable& pi, std::size_t start, std::size_t s,
                             std::size_t a, std::size_t l);

/// Bellman residual of (v, q) for a layered policy.
template <class Kernel>
double stacked_residual(const Kernel& kernel, const LayeredTable& pi, const LayeredTable& cost,
                        const StackedValues& values);

/// Runs the layered policy with a geometric layer counter and falls back to
/// the fast policy once the counter reaches the terminal layer.
EpisodeLog sigma_execute(EpisodeEnvironment& env, const LayeredTable& pi, const StationaryPolicy& fast,
                         const SdaParams& params, Rng& rng, std::size_t episode = 0,
                         std::size_t max_steps = 10'000'000);

}  // namespace ssp
