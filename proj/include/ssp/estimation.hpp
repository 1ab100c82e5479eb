#pragma once

// Visit counters, empirical transitions, Bernstein confidence sets and the
// optimistic cost estimator.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ssp/episode.hpp"
#include "ssp/layered.hpp"
#include "ssp/sda.hpp"

namespace ssp {

enum class Feedback { StochasticCosts, FullInformation, Bandit };

/// ln(2 S A L K / delta).
double confidence_log_factor(std::size_t num_states, std::size_t num_actions, const SdaParams& params);

class ConfidenceState {
 public:
  ConfidenceState() = default;
  ConfidenceState(std::size_t num_states, std::size_t num_actions, double iota);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double iota() const { return iota_; }
  std::size_t episodes_seen() const { return episodes_; }

  /// Under full information, count every pair each episode (default) or only
  /// the pairs visited before the switch.
  void set_full_info_counts_all_pairs(bool value) { full_info_all_pairs_ = value; }
  bool full_info_counts_all_pairs() const { return full_info_all_pairs_; }

  std::uint64_t visits(std::size_t s, std::size_t a) const { return n_[s * num_actions_ + a]; }
  std::uint64_t transitions(std::size_t s, std::size_t a, std::size_t next) const {
    return n_next_[(s * num_actions_ + a) * (num_states_ + 1) + next];
  }
  std::uint64_t cost_observations(std::size_t s, std::size_t a) const { return m_[s * num_actions_ + a]; }
  double cost_sum(std::size_t s, std::size_t a) const { return c_[s * num_actions_ + a]; }

  /// Empirical P̄(next | s, a); zero before any data.
  double empirical(std::size_t s, std::size_t a, std::size_t next) const;
  /// ι / max{1, N(s, a)}.
  double alpha_prime(std::size_t s, std::size_t a) const;
  /// 4 sqrt(P̄ α') + 28 α'.
  double radius(std::size_t s, std::size_t a, std::size_t next) const;

  /// Adds one finished episode. Only pre-switch steps are counted.
  void update(const EpisodeLog& log, Feedback feedback, const RevealedCosts& revealed);

  nlohmann::json to_json() const;
  static ConfidenceState from_json(const nlohmann::json& doc);

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  double iota_ = 1.0;
  std::size_t episodes_ = 0;
  bool full_info_all_pairs_ = true;
  std::vector<std::uint64_t> n_;
  std::vector<std::uint64_t> n_next_;
  std::vector<std::uint64_t> m_;
  std::vector<double> c_;
};

/// Whether a stacked row (stay[S], advance[S], goal) lies in the confidence set.
bool conf_membership(const ConfidenceState& conf, double gamma, std::size_t s, std::size_t a,
                     std::span<const double> row, double tolerance = 1e-12);

/// Whether every row of the true stacked kernel lies in the confidence set.
bool covers(const ConfidenceState& conf, const SspInstance& instance, double gamma);

/// 8 sqrt(p α') + 136 α' for a stacked transition probability p.
double radius_star(const ConfidenceState& conf, std::size_t s, std::size_t a, double p);

/// max{0, c̄ − 2 sqrt(c̄ α) − 7 α} with c̄ = C / 𝔑⁺ and α = ι / 𝔑⁺.
double optimistic_cost(double cost_sum, std::uint64_t observations, double iota);

/// ĉ(s, a) for every pair, row-major.
std::vector<double> cost_estimator(const ConfidenceState& conf);

/// ĉ on layers below H, c_f on the terminal layer.
LayeredTable stacked_cost_estimate(const ConfidenceState& conf, std::size_t horizon, double terminal_cost);

}  // namespace ssp
