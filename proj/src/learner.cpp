#include "ssp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ssp/errors.hpp"

namespace ssp {

std::string to_string(Setting setting) {
  switch (setting) {
    case Setting::StochasticCosts: return "stochastic-costs";
    case Setting::StochAdvFull: return "stoch-adv-full";
    case Setting::StochAdvBandit: return "stoch-adv-bandit";
    case Setting::AdvFull: return "adv-full";
    case Setting::AdvBandit: return "adv-bandit";
  }
  return "unknown";
}

Setting parse_setting(const std::string& name) {
  for (auto s : {Setting::StochasticCosts, Setting::StochAdvFull, Setting::StochAdvBandit, Setting::AdvFull,
                 Setting::AdvBandit})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown setting '" + name + "'");
}

Feedback feedback_of(Setting setting) {
  switch (setting) {
    case Setting::StochasticCosts: return Feedback::StochasticCosts;
    case Setting::StochAdvFull:
    case Setting::AdvFull: return Feedback::FullInformation;
    case Setting::StochAdvBandit:
    case Setting::AdvBandit: return Feedback::Bandit;
  }
  return Feedback::StochasticCosts;
}

bool is_adversarial(Setting setting) { return setting == Setting::AdvFull || setting == Setting::AdvBandit; }

namespace {

using Overrides = std::map<std::string, double>;

double pick(const Overrides& o, const std::string& key, double fallback) {
  auto it = o.find(key);
  return it == o.end() ? fallback : it->second;
}

Schedule complete_schedule(Setting setting, std::size_t num_states, std::size_t num_actions, const SdaParams& sda,
                           const KeyParams& key, const Overrides& o) {
  const double S = static_cast<double>(num_states), A = static_cast<double>(num_actions);
  const double K = static_cast<double>(sda.episodes);
  const double H = static_cast<double>(sda.num_layers);
  const double t_max = key.t_max, D = key.diameter, t_star = key.t_star;
  Schedule out;
  out.iota = pick(o, "iota", confidence_log_factor(num_states, num_actions, sda));
  out.l_prime = pick(o, "l_prime", sda.step_cap + sda.terminal_cost);
  out.beta_prime = pick(o, "beta_prime", std::min(1.0 / t_max, 1.0 / std::sqrt(D * t_star * K)));
  out.beta = pick(o, "beta", std::min(1.0 / t_max, std::sqrt(S * A / (D * t_star * K))));

  switch (setting) {
    case Setting::StochasticCosts:
    case Setting::StochAdvFull:
    case Setting::StochAdvBandit: {
      const double box = setting == Setting::StochasticCosts ? key.b_star : D;
      out.lambda = pick(o, "lambda", std::min(1.0 / t_max, std::sqrt(S * S * A / (box * box * K))));
      const double scale = 8.0 * out.iota + sda.chi / t_max;
      double eta = 1.0 / (3.0 * t_max * scale * scale);
      if (out.lambda > 0.0) eta = std::min(eta, 1.0 / std::sqrt(out.lambda * std::pow(t_max, 4) * K));
      out.eta = pick(o, "eta", eta);
      break;
    }
    case Setting::AdvFull: {
      const double h_prime = sda.dilation_horizon;
      out.eta = pick(o, "eta", std::min(1.0 / (64.0 * sda.chi * sda.chi * std::sqrt(H * h_prime)),
                                        1.0 / std::sqrt(D * K)));
      out.lambda = pick(o, "lambda", std::min(1.0 / sda.chi, 48.0 * out.eta + std::sqrt(S * S * A / (D * t_star * K))));
      break;
    }
    case Setting::AdvBandit: {
      const double h_prime = sda.dilation_horizon;
      out.eta = pick(o, "eta", std::min(1.0 / (300.0 * H * h_prime * t_max * out.l_prime),
                                        std::sqrt(1.0 / (t_max * t_max * S * A * K))));
      out.lambda = pick(o, "lambda", 0.0);
      break;
    }
  }
  out.theta = pick(o, "theta", 2.0 * out.eta * out.l_prime);
  return out;
}

}  // namespace

Schedule default_schedule(Setting setting, std::size_t num_states, std::size_t num_actions, const SdaParams& sda,
                          const KeyParams& key) {
  return complete_schedule(setting, num_states, num_actions, sda, key, {});
}

LearnerConfig make_learner_config(Setting setting, std::size_t num_states, std::size_t num_actions,
                                  std::size_t episodes, double delta, const KeyParams& key,
                                  const std::map<std::string, double>& overrides) {
  static const char* known[] = {"eta",    "lambda",        "beta",          "beta_prime",  "theta",
                                "l_prime", "iota",         "gamma",         "num_layers",  "terminal_cost",
                                "evi_epsilon", "check_schedule", "full_info_all_pairs"};
  for (const auto& [name, value] : overrides) {
    if (std::find(std::begin(known), std::end(known), name) == std::end(known))
      throw ConfigError("unknown override '" + name + "'");
    if (!std::isfinite(value)) throw ConfigError("override '" + name + "' is not finite");
  }

  LearnerConfig cfg;
  cfg.setting = setting;
  cfg.key = key;
  cfg.sda = sda_params(episodes, delta, key.diameter, key.t_max);
  if (overrides.count("gamma") || overrides.count("num_layers") || overrides.count("terminal_cost")) {
    cfg.sda.gamma = pick(overrides, "gamma", cfg.sda.gamma);
    if (!(cfg.sda.gamma > 0.0 && cfg.sda.gamma < 1.0)) throw ConfigError("gamma override must lie in (0, 1)");
    cfg.sda.terminal_cost = pick(overrides, "terminal_cost", cfg.sda.terminal_cost);
    const double layers = pick(overrides, "num_layers", static_cast<double>(cfg.sda.num_layers));
    if (layers < 1.0) throw ConfigError("num_layers override must be at least 1");
    cfg.sda.num_layers = static_cast<std::size_t>(layers);
    cfg.sda = rederive(cfg.sda);
  }
  cfg.schedule = complete_schedule(setting, num_states, num_actions, cfg.sda, key, overrides);
  cfg.evi_epsilon = pick(overrides, "evi_epsilon", 1.0 / static_cast<double>(episodes));
  cfg.check_schedule = pick(overrides, "check_schedule", 1.0) != 0.0;
  cfg.full_info_all_pairs = pick(overrides, "full_info_all_pairs", 1.0) != 0.0;
  if (!(cfg.schedule.eta >= 0.0)) throw ConfigError("eta must be non-negative");
  if (!(cfg.evi_epsilon > 0.0)) throw ConfigError("evi_epsilon must be positive");
  return cfg;
}

LayeredTable policy_from_exponent(const LayeredTable& z, double eta) {
  LayeredTable pi(z.num_states(), z.num_actions(), z.num_layers());
  for (std::size_t l = 0; l < z.num_layers(); ++l)
    for (std::size_t s = 0; s < z.num_states(); ++s) {
      auto zr = z.row(s, l);
      auto pr = pi.row(s, l);
      const double shift = *std::min_element(zr.begin(), zr.end());
      double total = 0.0;
      for (std::size_t a = 0; a < zr.size(); ++a) total += pr[a] = std::exp(-eta * (zr[a] - shift));
      for (double& p : pr) p /= total;
    }
  return pi;
}

LayeredTable mwu_update(const LayeredTable& pi, const LayeredTable& loss, double eta, bool check) {
  if (!pi.same_shape(loss)) throw InvalidArgument("policy and loss shapes differ");
  if (check && eta * loss.max_abs() > 1.0) {
    std::ostringstream msg;
    msg << "eta * |Q~ - B| = " << eta * loss.max_abs() << " exceeds 1";
    throw ScheduleViolation(msg.str());
  }
  LayeredTable out(pi.num_states(), pi.num_actions(), pi.num_layers());
  for (std::size_t l = 0; l < pi.num_layers(); ++l)
    for (std::size_t s = 0; s < pi.num_states(); ++s) {
      auto lr = loss.row(s, l);
      auto pr = pi.row(s, l);
      auto orow = out.row(s, l);
      const double shift = *std::min_element(lr.begin(), lr.end());
      double total = 0.0;
      for (std::size_t a = 0; a < lr.size(); ++a) total += orow[a] = pr[a] * std::exp(-eta * (lr[a] - shift));
      for (double& p : orow) p /= total;
    }
  return out;
}

LayeredTable correction_term(const LearnerConfig& config, const std::vector<double>& chat, const LayeredTable& q_hat,
                             std::size_t k) {
  const std::size_t S = q_hat.num_states(), A = q_hat.num_actions(), H = q_hat.num_layers() - 1;
  LayeredTable e(S, A, H + 1);
  if (config.setting == Setting::StochasticCosts) return e;
  const auto& sch = config.schedule;
  for (std::size_t l = 0; l < H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        if (config.setting == Setting::StochAdvFull)
          e(s, a, l) = 8.0 * sch.iota * std::sqrt(chat[s * A + a] / static_cast<double>(k)) +
                       sch.beta_prime * q_hat(s, a, l);
        else if (config.setting == Setting::StochAdvBandit)
          e(s, a, l) = sch.beta * q_hat(s, a, l);
      }
  return e;
}

EpisodeEstimates stochastic_episode(const LearnerConfig& config, const LayeredTable& pi, const PolytopeSet& polytopes,
                                    const ConfidenceState& conf, std::size_t k) {
  if (is_adversarial(config.setting)) throw InvalidArgument("stochastic episode op called for an adversarial setting");
  const std::size_t S = pi.num_states(), A = pi.num_actions(), H = pi.num_layers() - 1;
  const auto chat = cost_estimator(conf);
  const auto stacked = stacked_cost_estimate(conf, H, config.sda.terminal_cost);

  EpisodeEstimates out;
  auto first = optimistic_q(polytopes, pi, stacked, config.evi_epsilon);
  out.q_hat = std::move(first.q);
  const auto e = correction_term(config, chat, out.q_hat, k);
  out.corrected = LayeredTable(S, A, H + 1);
  for (std::size_t i = 0; i < out.corrected.data().size(); ++i)
    out.corrected.data()[i] =
        (1.0 + config.schedule.lambda * out.q_hat.data()[i]) * stacked.data()[i] + e.data()[i];
  auto second = optimistic_q(polytopes, pi, out.corrected, config.evi_epsilon);
  out.q_tilde = std::move(second.q);
  out.bonus = LayeredTable(S, A, H + 1);
  out.b = LayeredTable(S, A, H + 1);
  out.evi_sweeps = first.sweeps + second.sweeps;

  if (config.check_schedule) {
    const double t_max = config.key.t_max;
    const double scale = 8.0 * config.schedule.iota + config.sda.chi / t_max;
    const double bound = 3.0 * t_max * scale * scale;
    if (out.q_tilde.max_abs() > bound) {
      std::ostringstream msg;
      msg << "Q~ = " << out.q_tilde.max_abs() << " exceeds its design bound " << bound;
      throw ScheduleViolation(msg.str());
    }
  }
  return out;
}

EpisodeEstimates adv_full_episode(const LearnerConfig& config, const LayeredTable& pi, const PolytopeSet& polytopes,
                                  const std::vector<double>& cost) {
  const std::size_t S = pi.num_states(), A = pi.num_actions(), H = pi.num_layers() - 1;
  if (cost.size() != S * A) throw FeedbackMismatch("revealed cost table has the wrong size");
  LayeredTable stacked(S, A, H + 1);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) stacked(s, a, l) = l == H ? config.sda.terminal_cost : cost[s * A + a];

  EpisodeEstimates out;
  auto first = optimistic_q(polytopes, pi, stacked, config.evi_epsilon);
  out.q_hat = std::move(first.q);
  out.corrected = LayeredTable(S, A, H + 1);
  for (std::size_t i = 0; i < stacked.data().size(); ++i)
    out.corrected.data()[i] = (1.0 + config.schedule.lambda * out.q_hat.data()[i]) * stacked.data()[i];
  auto second = optimistic_q(polytopes, pi, out.corrected, config.evi_epsilon);
  out.q_tilde = std::move(second.q);

  out.b = LayeredTable(S, A, H + 1);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s) {
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) v += pi(s, a, l) * out.q_tilde(s, a, l);
      double spread = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const double adv = out.q_tilde(s, a, l) - v;
        spread += pi(s, a, l) * adv * adv;
      }
      for (std::size_t a = 0; a < A; ++a) out.b(s, a, l) = 2.0 * config.schedule.eta * spread;
    }
  auto dilated = dilated_bonus(polytopes, pi, out.b, config.sda.dilation_horizon, config.evi_epsilon);
  out.bonus = std::move(dilated.bonus);
  out.evi_sweeps = first.sweeps + second.sweeps + dilated.sweeps;

  if (config.check_schedule) {
    const double lhs = config.schedule.eta * out.bonus.max_abs();
    const double rhs = 1.0 / (2.0 * config.sda.dilation_horizon);
    if (lhs > rhs) {
      std::ostringstream msg;
      msg << "eta * |B| = " << lhs << " exceeds 1/(2H') = " << rhs;
      throw ScheduleViolation(msg.str());
    }
  }
  return out;
}

LayeredTable first_visit_cost(const LearnerConfig& config, const EpisodeLog& log, const RevealedCosts& revealed,
                              std::size_t num_states, std::size_t num_actions) {
  const std::size_t H = config.sda.num_layers;
  const auto window = static_cast<std::size_t>(config.sda.step_cap) + 1;

  std::vector<const EpisodeStep*> pre;
  for (const auto& st : log.steps)
    if (st.pre_switch) pre.push_back(&st);
  const std::size_t J = pre.size();
  const std::size_t upto = std::min(J, window);

  // Stacked costs c_1..c_upto, then the terminal step J + 1 if it is in the window.
  std::vector<double> costs(upto);
  for (std::size_t i = 0; i < upto; ++i) {
    auto it = revealed.visited.find({pre[i]->state, pre[i]->action});
    if (it == revealed.visited.end()) throw FeedbackMismatch("bandit disclosure lacks a visited pair");
    costs[i] = it->second;
  }
  double tail = (log.switched && J + 1 <= window) ? log.terminal_cost : 0.0;
  std::vector<double> suffix(upto + 1, 0.0);
  suffix[upto] = tail;
  for (std::size_t i = upto; i-- > 0;) suffix[i] = suffix[i + 1] + costs[i];

  LayeredTable g(num_states, num_actions, H + 1);
  LayeredTable seen(num_states, num_actions, H + 1);
  for (std::size_t i = 0; i < upto; ++i) {
    const auto& st = *pre[i];
    if (st.layer >= H || seen(st.state, st.action, st.layer) != 0.0) continue;
    seen(st.state, st.action, st.layer) = 1.0;
    g(st.state, st.action, st.layer) = suffix[i];
  }
  return g;
}

EpisodeEstimates adv_bandit_episode(const LearnerConfig& config, const LayeredTable& pi, const PolytopeSet& polytopes,
                                    std::size_t start, const EpisodeLog& log, const RevealedCosts& revealed) {
  const std::size_t S = pi.num_states(), A = pi.num_actions(), H = pi.num_layers() - 1;
  const double theta = config.schedule.theta, l_prime = config.schedule.l_prime;
  auto [upper, lower] = all_visit_prob_bounds(polytopes, pi, start);
  const auto g = first_visit_cost(config, log, revealed, S, A);

  EpisodeEstimates out;
  out.q_hat = LayeredTable(S, A, H + 1);
  out.corrected = LayeredTable(S, A, H + 1);
  out.q_tilde = LayeredTable(S, A, H + 1);
  out.b = LayeredTable(S, A, H + 1);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) out.q_tilde(s, a, H) = config.sda.terminal_cost;
  for (std::size_t l = 0; l < H; ++l)
    for (std::size_t s = 0; s < S; ++s) {
      double gap = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const double denom = upper(s, a, l) + theta;
        out.q_tilde(s, a, l) = denom > 0.0 ? g(s, a, l) / denom : 0.0;
        if (denom > 0.0) gap += pi(s, a, l) * (upper(s, a, l) - lower(s, a, l) + 4.0 * theta) / denom;
      }
      for (std::size_t a = 0; a < A; ++a) out.b(s, a, l) = l_prime * gap;
    }
  auto dilated = dilated_bonus(polytopes, pi, out.b, config.sda.dilation_horizon, config.evi_epsilon);
  out.bonus = std::move(dilated.bonus);
  out.evi_sweeps = dilated.sweeps;

  if (config.check_schedule) {
    double worst = 0.0;
    for (std::size_t i = 0; i < out.q_tilde.data().size(); ++i)
      worst = std::max(worst, std::abs(out.q_tilde.data()[i] - out.bonus.data()[i]));
    if (config.schedule.eta * worst > 1.0) {
      std::ostringstream msg;
      msg << "eta * |Q~ - B| = " << config.schedule.eta * worst << " exceeds 1";
      throw ScheduleViolation(msg.str());
    }
  }
  return out;
}

Learner::Learner(LearnerConfig config, std::size_t num_states, std::size_t num_actions, std::size_t init_state)
    : config_(std::move(config)),
      num_states_(num_states),
      num_actions_(num_actions),
      init_state_(init_state),
      z_(num_states, num_actions, config_.sda.num_layers + 1),
      pi_(uniform_layered_policy(num_states, num_actions, config_.sda.num_layers)),
      conf_(num_states, num_actions, config_.schedule.iota) {
  conf_.set_full_info_counts_all_pairs(config_.full_info_all_pairs);
}

EpisodeEstimates Learner::observe(const EpisodeLog& log, const RevealedCosts& revealed) {
  const auto polytopes = PolytopeSet::from_confidence(conf_, config_.sda.gamma);
  EpisodeEstimates est;
  switch (config_.setting) {
    case Setting::StochasticCosts:
    case Setting::StochAdvFull:
    case Setting::StochAdvBandit: est = stochastic_episode(config_, pi_, polytopes, conf_, k_); break;
    case Setting::AdvFull:
      if (!revealed.full) throw FeedbackMismatch("full-information episode without a revealed table");
      est = adv_full_episode(config_, pi_, polytopes, *revealed.full);
      break;
    case Setting::AdvBandit: est = adv_bandit_episode(config_, pi_, polytopes, init_state_, log, revealed); break;
  }

  LayeredTable loss = est.q_tilde;
  for (std::size_t i = 0; i < loss.data().size(); ++i) loss.data()[i] -= est.bonus.data()[i];
  if (config_.check_schedule && config_.schedule.eta * loss.max_abs() > 1.0) {
    std::ostringstream msg;
    msg << "episode " << k_ << ": eta * |Q~ - B| = " << config_.schedule.eta * loss.max_abs() << " exceeds 1";
    throw ScheduleViolation(msg.str());
  }
  for (std::size_t i = 0; i < loss.data().size(); ++i) z_.data()[i] += loss.data()[i];
  pi_ = policy_from_exponent(z_, config_.schedule.eta);

  conf_.update(log, feedback_of(config_.setting), revealed);
  ++k_;
  return est;
}

void run_learner(const LearnerConfig& config, EpisodicEnvironment& env, std::size_t init_state, std::size_t episodes,
                 Rng& rng, const EpisodeCallback& on_episode) {
  Learner learner(config, env.num_states(), env.num_actions(), init_state);
  for (std::size_t k = 1; k <= episodes; ++k) {
    env.begin_episode(k);
    auto log = sigma_execute(env, learner.policy(), config.key.fast_policy, config.sda, rng, k);
    const auto revealed = env.reveal(pre_switch_pairs(log));
    const auto est = learner.observe(log, revealed);

    EpisodeRecord rec;
    rec.k = k;
    rec.episode_cost = log.incurred_cost;
    rec.terminal_cost = log.terminal_cost;
    rec.stacked_cost = log.stacked_cost;
    rec.pre_switch_steps = log.pre_switch_steps;
    rec.switched = log.switched;
    rec.length = log.length();
    rec.max_qtilde = est.q_tilde.max_abs();
    rec.max_bonus = est.bonus.max_abs();
    if (on_episode) on_episode(rec, log);
  }
}

std::vector<EpisodeRecord> run_learner(const LearnerConfig& config, EpisodicEnvironment& env, std::size_t init_state,
                                       std::size_t episodes, Rng& rng, std::vector<EpisodeLog>* logs) {
  std::vector<EpisodeRecord> records;
  records.reserve(episodes);
  run_learner(config, env, init_state, episodes, rng, [&](const EpisodeRecord& rec, const EpisodeLog& log) {
    records.push_back(rec);
    if (logs) logs->push_back(log);
  });
  return records;
}

}  // namespace ssp
