#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ssp/env.hpp"
#include "ssp/errors.hpp"
#include "ssp/learner.hpp"
#include "ssp/verify/oracles.hpp"

using namespace ssp;

namespace {

struct Fixture {
  SspInstance instance;
  CostFunction cost;
  KeyParams key;
};

Fixture small_fixture() {
  Rng rng(31);
  Fixture f;
  f.instance = oracle::random_instance(3, 2, 0.1, rng);
  f.cost = oracle::random_cost(3, 2, 0.5, rng);
  f.key = key_params(f.instance, f.cost);
  return f;
}

}  // namespace

TEST_CASE("multiplicative weights closed form") {
  LayeredTable pi(1, 2, 1, 0.5);
  LayeredTable loss(1, 2, 1);
  loss(0, 1, 0) = std::log(3.0);
  const auto next = mwu_update(pi, loss, 1.0, false);
  CHECK(next(0, 0, 0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(next(0, 1, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(mwu_update(pi, loss, 1.0, true), ScheduleViolation);

  // Shifts and η = 0 leave the policy unchanged.
  LayeredTable skewed(1, 2, 1);
  skewed(0, 0, 0) = 0.3;
  skewed(0, 1, 0) = 0.7;
  const auto shifted = mwu_update(skewed, LayeredTable(1, 2, 1, 0.4), 1.0);
  CHECK(shifted(0, 0, 0) == doctest::Approx(0.3));
  const auto frozen = mwu_update(skewed, loss, 0.0);
  CHECK(frozen(0, 1, 0) == doctest::Approx(0.7));

  LayeredTable z(1, 2, 1);
  z(0, 1, 0) = std::log(3.0);
  const auto from_z = policy_from_exponent(z, 1.0);
  CHECK(from_z(0, 0, 0) == doctest::Approx(0.75));
}

TEST_CASE("setting names round trip") {
  for (auto s : {Setting::StochasticCosts, Setting::StochAdvFull, Setting::StochAdvBandit, Setting::AdvFull,
                 Setting::AdvBandit})
    CHECK(parse_setting(to_string(s)) == s);
  CHECK_THROWS_AS(parse_setting("mixed"), ConfigError);
  CHECK(feedback_of(Setting::AdvBandit) == Feedback::Bandit);
  CHECK(feedback_of(Setting::StochAdvFull) == Feedback::FullInformation);
  CHECK(is_adversarial(Setting::AdvFull));
  CHECK_FALSE(is_adversarial(Setting::StochAdvBandit));
}

TEST_CASE("overrides replace schedule values") {
  const auto f = small_fixture();
  const auto base = make_learner_config(Setting::StochasticCosts, 3, 2, 100, 0.1, f.key);
  CHECK(base.evi_epsilon == doctest::Approx(0.01));
  CHECK(base.check_schedule);
  const auto tuned = make_learner_config(Setting::StochasticCosts, 3, 2, 100, 0.1, f.key,
                                         {{"eta", 0.25}, {"check_schedule", 0.0}, {"num_layers", 4}});
  CHECK(tuned.schedule.eta == 0.25);
  CHECK_FALSE(tuned.check_schedule);
  CHECK(tuned.sda.num_layers == 4);
  CHECK(tuned.sda.chi == doctest::Approx(2.0 * 4 * tuned.sda.t_max + tuned.sda.terminal_cost));
  CHECK_THROWS_AS(make_learner_config(Setting::StochasticCosts, 3, 2, 100, 0.1, f.key, {{"etta", 1.0}}), ConfigError);
  CHECK_THROWS_AS(make_learner_config(Setting::StochasticCosts, 3, 2, 100, 0.1, f.key, {{"gamma", 1.5}}), ConfigError);
}

TEST_CASE("correction term with zero optimistic values") {
  const auto f = small_fixture();
  auto cfg = make_learner_config(Setting::StochAdvFull, 3, 2, 100, 0.1, f.key);
  const std::size_t H = cfg.sda.num_layers;
  const std::vector<double> chat{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const LayeredTable zero(3, 2, H + 1);
  const std::size_t k = 7;
  const auto e = correction_term(cfg, chat, zero, k);
  for (std::size_t l = 0; l < H; ++l)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a)
        CHECK(e(s, a, l) == doctest::Approx(8.0 * cfg.schedule.iota * std::sqrt(chat[s * 2 + a] / k)));
  for (std::size_t s = 0; s < 3; ++s) CHECK(e(s, 0, H) == 0.0);

  // For large k only the β' Q̂ part remains.
  const LayeredTable ones(3, 2, H + 1, 1.0);
  const std::size_t big = 1'000'000'000'000ULL;
  const auto late = correction_term(cfg, chat, ones, big);
  const double residual = late(2, 1, 0) - cfg.schedule.beta_prime;
  CHECK(residual == doctest::Approx(8.0 * cfg.schedule.iota * std::sqrt(0.6 / static_cast<double>(big))));
  CHECK(residual < e(2, 1, 0));

  auto bandit = make_learner_config(Setting::StochAdvBandit, 3, 2, 100, 0.1, f.key);
  CHECK(correction_term(bandit, chat, ones, 3)(1, 1, 0) == doctest::Approx(bandit.schedule.beta));
  auto plain = make_learner_config(Setting::StochasticCosts, 3, 2, 100, 0.1, f.key);
  CHECK(correction_term(plain, chat, ones, 3).max_abs() == 0.0);
}

TEST_CASE("zero correction reproduces the optimistic Q") {
  const auto f = small_fixture();
  auto cfg = make_learner_config(Setting::StochasticCosts, 3, 2, 100, 0.1, f.key, {{"lambda", 0.0}, {"num_layers", 3}});
  ConfidenceState conf(3, 2, cfg.schedule.iota);
  Rng rng(4);
  const auto polys = PolytopeSet::from_confidence(conf, cfg.sda.gamma);
  const auto pi = oracle::random_layered_policy(3, 2, 3, rng);
  const auto est = stochastic_episode(cfg, pi, polys, conf, 1);
  for (std::size_t i = 0; i < est.q_tilde.data().size(); ++i) CHECK(est.q_tilde.data()[i] == est.q_hat.data()[i]);
  // No data: ĉ = 0 below the terminal layer.
  for (std::size_t s = 0; s < 3; ++s) CHECK(est.corrected(s, 0, 0) == 0.0);
}

TEST_CASE("full-information bonus is nonnegative and dilated above b") {
  const auto f = small_fixture();
  auto cfg = make_learner_config(Setting::AdvFull, 3, 2, 50, 0.1, f.key,
                                 {{"num_layers", 3}, {"eta", 0.05}, {"check_schedule", 0.0}});
  Rng rng(12);
  const auto polys = PolytopeSet::singleton(f.instance, cfg.sda.gamma);
  const auto pi = oracle::random_layered_policy(3, 2, 3, rng);
  const auto est = adv_full_episode(cfg, pi, polys, f.cost.values());
  for (std::size_t i = 0; i < est.b.data().size(); ++i) {
    CHECK(est.b.data()[i] >= 0.0);
    CHECK(est.bonus.data()[i] >= est.b.data()[i] - 1e-12);
  }

  // A deterministic policy centres the advantage exactly, so b vanishes.
  LayeredTable det(3, 2, 4);
  for (std::size_t l = 0; l <= 3; ++l)
    for (std::size_t s = 0; s < 3; ++s) det(s, s % 2, l) = 1.0;
  const auto centred = adv_full_episode(cfg, det, polys, f.cost.values());
  CHECK(centred.b.max_abs() == 0.0);
  for (std::size_t l = 0; l <= 3; ++l)
    for (std::size_t s = 0; s < 3; ++s) {
      double v = 0.0, weighted = 0.0;
      for (std::size_t a = 0; a < 2; ++a) v += det(s, a, l) * centred.q_tilde(s, a, l);
      for (std::size_t a = 0; a < 2; ++a) weighted += det(s, a, l) * (centred.q_tilde(s, a, l) - v);
      CHECK(weighted == 0.0);
    }
}

TEST_CASE("bandit estimates") {
  const auto f = small_fixture();
  auto cfg = make_learner_config(Setting::AdvBandit, 3, 2, 50, 0.1, f.key,
                                 {{"num_layers", 2}, {"check_schedule", 0.0}});
  // Two pre-switch steps then a switch; the pair (0, 1) repeats.
  EpisodeLog log;
  log.steps = {test::step_of(0, 1, 1, 0.0, true, false, 0), test::step_of(1, 0, 0, 0.0, true, false, 0),
               test::step_of(0, 1, 2, 0.0, true, false, 1), test::step_of(2, 0, 3, 0.0, false, false, 2)};
  log.pre_switch_steps = 3;
  log.switched = true;
  log.switch_state = 2;
  log.terminal_cost = cfg.sda.terminal_cost;
  RevealedCosts revealed;
  revealed.visited[{0, 1}] = 0.3;
  revealed.visited[{1, 0}] = 0.6;
  const auto g = first_visit_cost(cfg, log, revealed, 3, 2);
  const double tc = cfg.sda.terminal_cost;
  CHECK(g(0, 1, 0) == doctest::Approx(0.3 + 0.6 + 0.3 + tc));
  CHECK(g(1, 0, 0) == doctest::Approx(0.6 + 0.3 + tc));
  CHECK(g(0, 1, 1) == doctest::Approx(0.3 + tc));
  CHECK(g(2, 0, 0) == 0.0);

  // A window shorter than the episode drops the later costs and the terminal cost.
  auto narrow = cfg;
  narrow.sda.step_cap = 1.0;
  const auto cut = first_visit_cost(narrow, log, revealed, 3, 2);
  CHECK(cut(0, 1, 0) == doctest::Approx(0.9));
  CHECK(cut(1, 0, 0) == doctest::Approx(0.6));
  CHECK(cut(0, 1, 1) == 0.0);

  revealed.visited.erase({1, 0});
  CHECK_THROWS_AS(first_visit_cost(cfg, log, revealed, 3, 2), FeedbackMismatch);
  revealed.visited[{1, 0}] = 0.6;

  Rng rng(13);
  const auto polys = PolytopeSet::singleton(f.instance, cfg.sda.gamma);
  const auto est = adv_bandit_episode(cfg, uniform_layered_policy(3, 2, 2), polys, 0, log, revealed);
  CHECK(est.q_tilde(2, 1, 0) == 0.0);
  CHECK(est.q_tilde(1, 1, 1) == 0.0);
  CHECK(est.q_tilde(0, 1, 0) > 0.0);
  for (std::size_t s = 0; s < 3; ++s) CHECK(est.q_tilde(s, 0, 2) == tc);
}

TEST_CASE("a single episode populates the exponent") {
  for (auto setting : {Setting::StochasticCosts, Setting::StochAdvFull, Setting::StochAdvBandit, Setting::AdvFull,
                       Setting::AdvBandit}) {
    EnvSpec spec;
    spec.num_states = 3;
    spec.num_actions = 2;
    spec.p_goal = 0.2;
    spec.seed = 5;
    auto gen = generate_instance(spec);
    const auto key = key_params(gen.instance, gen.mean_cost);
    const auto cfg = make_learner_config(setting, 3, 2, 1, 0.1, key, {{"check_schedule", 0.0}});
    SimulatedEnvironment env(gen, setting, 7);
    Rng rng(8);
    std::vector<EpisodeLog> logs;
    const auto records = run_learner(cfg, env, 0, 1, rng, &logs);
    REQUIRE(records.size() == 1);
    CHECK(logs.size() == 1);
    CHECK(records[0].k == 1);
    CHECK(std::isfinite(records[0].episode_cost));

    Learner learner(cfg, 3, 2, 0);
    CHECK(learner.policy()(0, 0, 0) == doctest::Approx(0.5));
    SimulatedEnvironment replay(gen, setting, 7);
    Rng replay_rng(8);
    replay.begin_episode(1);
    const auto log = sigma_execute(replay, learner.policy(), cfg.key.fast_policy, cfg.sda, replay_rng, 1);
    learner.observe(log, replay.reveal(pre_switch_pairs(log)));
    CHECK(learner.exponent().max_abs() > 0.0);
    CHECK(learner.episode() == 2);
    CHECK(format_episode_log(log) == format_episode_log(logs[0]));
  }
}

TEST_CASE("same seed gives the same second policy") {
  EnvSpec spec;
  spec.num_states = 3;
  spec.num_actions = 2;
  spec.p_goal = 0.2;
  spec.seed = 9;
  const auto gen = generate_instance(spec);
  const auto key = key_params(gen.instance, gen.mean_cost);
  auto policy_after_one = [&](Setting setting) {
    const auto cfg = make_learner_config(setting, 3, 2, 5, 0.1, key, {{"check_schedule", 0.0}});
    SimulatedEnvironment env(gen, setting, 3);
    Learner learner(cfg, 3, 2, 0);
    Rng rng(4);
    env.begin_episode(1);
    const auto log = sigma_execute(env, learner.policy(), cfg.key.fast_policy, cfg.sda, rng, 1);
    learner.observe(log, env.reveal(pre_switch_pairs(log)));
    return learner.policy().data();
  };
  for (auto setting : {Setting::StochasticCosts, Setting::AdvFull, Setting::AdvBandit})
    CHECK(policy_after_one(setting) == policy_after_one(setting));
}
