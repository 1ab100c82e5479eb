#include "ssp/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "ssp/errors.hpp"

namespace ssp {

double confidence_log_factor(std::size_t num_states, std::size_t num_actions, const SdaParams& params) {
  return std::log(2.0 * static_cast<double>(num_states) * static_cast<double>(num_actions) * params.step_cap *
                  static_cast<double>(params.episodes) / params.delta);
}

ConfidenceState::ConfidenceState(std::size_t num_states, std::size_t num_actions, double iota)
    : num_states_(num_states),
      num_actions_(num_actions),
      iota_(iota),
      n_(num_states * num_actions, 0),
      n_next_(num_states * num_actions * (num_states + 1), 0),
      m_(num_states * num_actions, 0),
      c_(num_states * num_actions, 0.0) {
  if (!(iota > 0.0)) throw InvalidArgument("iota must be positive");
}

double ConfidenceState::empirical(std::size_t s, std::size_t a, std::size_t next) const {
  const auto n = visits(s, a);
  return n == 0 ? 0.0 : static_cast<double>(transitions(s, a, next)) / static_cast<double>(n);
}

double ConfidenceState::alpha_prime(std::size_t s, std::size_t a) const {
  return iota_ / static_cast<double>(std::max<std::uint64_t>(1, visits(s, a)));
}

double ConfidenceState::radius(std::size_t s, std::size_t a, std::size_t next) const {
  const double alpha = alpha_prime(s, a);
  return 4.0 * std::sqrt(empirical(s, a, next) * alpha) + 28.0 * alpha;
}

void ConfidenceState::update(const EpisodeLog& log, Feedback feedback, const RevealedCosts& revealed) {
  const std::size_t S = num_states_, A = num_actions_;
  if (feedback == Feedback::FullInformation && !revealed.full)
    throw FeedbackMismatch("full-information update without a revealed cost table");
  if (revealed.full && revealed.full->size() != S * A) throw FeedbackMismatch("revealed cost table has the wrong size");

  std::vector<bool> seen(S * A, false);
  for (const auto& st : log.steps) {
    if (!st.pre_switch) continue;
    if (st.state >= S || st.action >= A || st.next > S) throw InvalidArgument("episode step out of range");
    const std::size_t idx = st.state * A + st.action;
    ++n_[idx];
    ++n_next_[idx * (S + 1) + st.next];
    seen[idx] = true;
    if (feedback == Feedback::StochasticCosts) {
      if (!st.observed) throw FeedbackMismatch("stochastic-cost update on a step without an observed cost");
      ++m_[idx];
      c_[idx] += st.cost;
    }
  }

  if (feedback == Feedback::FullInformation) {
    for (std::size_t idx = 0; idx < S * A; ++idx) {
      if (!full_info_all_pairs_ && !seen[idx]) continue;
      ++m_[idx];
      c_[idx] += (*revealed.full)[idx];
    }
  } else if (feedback == Feedback::Bandit) {
    for (std::size_t idx = 0; idx < S * A; ++idx) {
      if (!seen[idx]) continue;
      auto it = revealed.visited.find({idx / A, idx % A});
      if (it == revealed.visited.end()) throw FeedbackMismatch("bandit update lacks the cost of a visited pair");
      ++m_[idx];
      c_[idx] += it->second;
    }
  }
  ++episodes_;
}

nlohmann::json ConfidenceState::to_json() const {
  return nlohmann::json{{"num_states", num_states_},
                        {"num_actions", num_actions_},
                        {"iota", iota_},
                        {"episodes", episodes_},
                        {"full_info_all_pairs", full_info_all_pairs_},
                        {"visits", n_},
                        {"transitions", n_next_},
                        {"cost_observations", m_},
                        {"cost_sums", c_}};
}

ConfidenceState ConfidenceState::from_json(const nlohmann::json& doc) {
  ConfidenceState out(doc.at("num_states").get<std::size_t>(), doc.at("num_actions").get<std::size_t>(),
                      doc.at("iota").get<double>());
  out.episodes_ = doc.at("episodes").get<std::size_t>();
  out.full_info_all_pairs_ = doc.at("full_info_all_pairs").get<bool>();
  out.n_ = doc.at("visits").get<std::vector<std::uint64_t>>();
  out.n_next_ = doc.at("transitions").get<std::vector<std::uint64_t>>();
  out.m_ = doc.at("cost_observations").get<std::vector<std::uint64_t>>();
  out.c_ = doc.at("cost_sums").get<std::vector<double>>();
  const std::size_t SA = out.num_states_ * out.num_actions_;
  if (out.n_.size() != SA || out.m_.size() != SA || out.c_.size() != SA ||
      out.n_next_.size() != SA * (out.num_states_ + 1))
    throw InvalidArgument("confidence checkpoint has inconsistent table sizes");
  return out;
}

bool conf_membership(const ConfidenceState& conf, double gamma, std::size_t s, std::size_t a,
                     std::span<const double> row, double tolerance) {
  const std::size_t S = conf.num_states();
  if (row.size() != 2 * S + 1) return false;
  double stay = 0.0, advance = 0.0, total = 0.0;
  for (double p : row) {
    if (p < -tolerance) return false;
    total += p;
  }
  for (std::size_t t = 0; t < S; ++t) {
    const double pbar = conf.empirical(s, a, t);
    const double eps = conf.radius(s, a, t);
    if (std::abs(pbar - row[t] / gamma) > eps + tolerance) return false;
    if (std::abs(pbar - row[S + t] / (1.0 - gamma)) > eps + tolerance) return false;
    stay += row[t];
    advance += row[S + t];
  }
  if (std::abs(conf.empirical(s, a, S) - row[2 * S]) > conf.radius(s, a, S) + tolerance) return false;
  return stay <= gamma + tolerance && advance <= 1.0 - gamma + tolerance && std::abs(total - 1.0) <= tolerance * 10;
}

bool covers(const ConfidenceState& conf, const SspInstance& instance, double gamma) {
  const std::size_t S = instance.num_states();
  std::vector<double> row(2 * S + 1);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < instance.num_actions(); ++a) {
      auto p = instance.row(s, a);
      for (std::size_t t = 0; t < S; ++t) {
        row[t] = gamma * p[t];
        row[S + t] = (1.0 - gamma) * p[t];
      }
      row[2 * S] = p[S];
      if (!conf_membership(conf, gamma, s, a, row)) return false;
    }
  return true;
}

double radius_star(const ConfidenceState& conf, std::size_t s, std::size_t a, double p) {
  const double alpha = conf.alpha_prime(s, a);
  return 8.0 * std::sqrt(p * alpha) + 136.0 * alpha;
}

double optimistic_cost(double cost_sum, std::uint64_t observations, double iota) {
  const double n = static_cast<double>(std::max<std::uint64_t>(1, observations));
  const double mean = cost_sum / n;
  const double alpha = iota / n;
  return std::max(0.0, mean - 2.0 * std::sqrt(mean * alpha) - 7.0 * alpha);
}

std::vector<double> cost_estimator(const ConfidenceState& conf) {
  const std::size_t S = conf.num_states(), A = conf.num_actions();
  std::vector<double> out(S * A);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a)
      out[s * A + a] = optimistic_cost(conf.cost_sum(s, a), conf.cost_observations(s, a), conf.iota());
  return out;
}

LayeredTable stacked_cost_estimate(const ConfidenceState& conf, std::size_t horizon, double terminal_cost) {
  const std::size_t S = conf.num_states(), A = conf.num_actions();
  const auto chat = cost_estimator(conf);
  LayeredTable out(S, A, horizon + 1);
  for (std::size_t l = 0; l <= horizon; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) out(s, a, l) = l == horizon ? terminal_cost : chat[s * A + a];
  return out;
}

}  // namespace ssp
