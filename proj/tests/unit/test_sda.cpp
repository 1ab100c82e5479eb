#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ssp/errors.hpp"
#include "ssp/sda.hpp"
#include "ssp/verify/oracles.hpp"

using namespace ssp;

TEST_CASE("parameter formulas") {
  const auto p = sda_params(100, 0.1, 2.0, 4.0);
  CHECK(p.gamma == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(p.terminal_cost == 61.0);
  CHECK(p.num_layers == 13);
  CHECK(p.chi == doctest::Approx(2.0 * 13 * 4 + 61));
  CHECK(sda_params(10, 0.1, 1.0, 1.0).gamma == doctest::Approx(0.5));
  // c_f K = 2 gives a single layer.
  CHECK(layers_for(2.0, 1) == 1);
  CHECK(layers_for(1.0, 1) == 1);
  CHECK(layers_for(61.0, 100) == 13);
  CHECK(layers_for(1.0, 8) == 3);
  CHECK(layers_for(1.0, 9) == 4);
  CHECK_THROWS_AS(sda_params(0, 0.1, 2.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(sda_params(10, 1.5, 2.0, 2.0), InvalidArgument);
}

TEST_CASE("terminal cost indicator") {
  SdaParams p;
  p.terminal_cost = 7.0;
  CHECK(terminal_cost_at(p, 3, 3) == 0.0);
  CHECK(terminal_cost_at(p, 1, 3) == 7.0);
}

TEST_CASE("stacked rows split the base row into stay, advance and goal") {
  Rng rng(11);
  const auto m = oracle::random_instance(3, 2, 0.1, rng);
  const StackedMdp mdp(m, 0.8, 4);
  const auto kernel = mdp.to_kernel();
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        const auto row = kernel.row(s, a, l);
        double total = 0.0;
        for (std::size_t t = 0; t < 3; ++t) {
          CHECK(row[t] == doctest::Approx(0.8 * m.prob(s, a, t)));
          CHECK(row[3 + t] == doctest::Approx(0.2 * m.prob(s, a, t)));
        }
        CHECK(row[6] == doctest::Approx(m.prob(s, a, 3)));
        for (double x : row) total += x;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
      }
}

TEST_CASE("mirrored policy repeats every row") {
  const StationaryPolicy pi = StationaryPolicy::deterministic(2, {1, 0, 1});
  const auto mirrored = mirror_policy(pi, 1);
  CHECK(mirrored.num_layers() == 2);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t a = 0; a < 2; ++a) {
      CHECK(mirrored(s, a, 0) == pi(s, a));
      CHECK(mirrored(s, a, 1) == pi(s, a));
    }
}

TEST_CASE("stacked evaluation against the dense solve") {
  Rng rng(21);
  const auto m = oracle::random_instance(3, 2, 0.1, rng);
  const std::size_t H = 3;
  const StackedMdp mdp(m, 0.75, H);
  const auto pi = oracle::random_layered_policy(3, 2, H, rng);
  const auto cost = stacked_cost(oracle::random_cost(3, 2, 0.1, rng), H, 2.0);
  const auto values = stacked_policy_evaluation(mdp, pi, cost);
  const auto dense = oracle::dense_stacked_values(mdp.to_kernel(), pi, cost);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < 3; ++s) CHECK(std::abs(values.v.at(s, l) - dense.at(s, l)) < 1e-9);
  CHECK(stacked_residual(mdp, pi, cost, values) < 1e-9);
  // Terminal layer pays c_f once.
  for (std::size_t s = 0; s < 3; ++s) CHECK(values.v.at(s, H) == doctest::Approx(2.0));

  const auto q = stacked_occupancy(mdp, pi, 0);
  const auto q_dense = oracle::dense_stacked_occupancy(mdp.to_kernel(), pi, 0);
  for (std::size_t i = 0; i < q.data().size(); ++i) CHECK(std::abs(q.data()[i] - q_dense.data()[i]) < 1e-9);
}

TEST_CASE("zero costs give zero values") {
  const SspInstance loop(1, 1, 0, {0.5, 0.5});
  const StackedMdp mdp(loop, 0.5, 2);
  const auto values = stacked_policy_evaluation(mdp, uniform_layered_policy(1, 1, 2), stacked_cost(CostFunction::constant(1, 1, 0.0), 2, 0.0));
  CHECK(values.v.max_abs() == 0.0);
}

TEST_CASE("immediate goal ends the episode after one step") {
  const SspInstance jump(1, 1, 0, {0.0, 1.0});
  test::InstanceEnv env(jump, 0.5, 1);
  Rng rng(2);
  SdaParams p = sda_params(10, 0.1, 2.0, 2.0);
  const auto log = sigma_execute(env, uniform_layered_policy(1, 1, p.num_layers), StationaryPolicy::uniform(1, 1), p, rng);
  CHECK(log.length() == 1);
  CHECK(log.pre_switch_steps == 1);
  CHECK_FALSE(log.switched);
  CHECK(log.steps[0].layer == 0);
  CHECK(log.stacked_cost == doctest::Approx(0.5));
}

TEST_CASE("layer counter advances geometrically") {
  // One state that never reaches the goal within the layered phase:
  // the goal probability is tiny, so almost every episode switches.
  const SspInstance slow(1, 1, 0, {0.999, 0.001});
  SdaParams p;
  p.gamma = 0.75;
  p.num_layers = 2;
  p.terminal_cost = 5.0;
  Rng rng(3);
  double total_pre = 0.0;
  std::size_t switched = 0;
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) {
    test::InstanceEnv env(slow, 0.1, 100 + i);
    const auto log = sigma_execute(env, uniform_layered_policy(1, 1, 2), StationaryPolicy::uniform(1, 1), p, rng);
    total_pre += static_cast<double>(log.pre_switch_steps);
    if (log.switched) {
      ++switched;
      CHECK(log.terminal_cost == 5.0);
      CHECK(log.steps[log.pre_switch_steps - 1].layer == 1);
    }
    for (std::size_t t = 0; t < log.pre_switch_steps; ++t) CHECK(log.steps[t].pre_switch);
    for (std::size_t t = log.pre_switch_steps; t < log.length(); ++t) CHECK_FALSE(log.steps[t].pre_switch);
  }
  // Without the goal, J is a sum of two geometric(1/4) variables: mean 8.
  // The goal shortens it slightly; 3 standard errors of sd sqrt(24) dominate.
  const double mean = total_pre / static_cast<double>(n);
  CHECK(mean < 8.0 + 3.0 * std::sqrt(24.0 / n));
  CHECK(mean > 7.8);
  CHECK(switched > n * 9 / 10);
}

TEST_CASE("runaway episodes raise EpisodeOverflow") {
  const SspInstance trap(1, 1, 0, {1.0, 0.0});
  test::InstanceEnv env(trap, 0.5, 1);
  Rng rng(4);
  SdaParams p;
  p.gamma = 0.5;
  p.num_layers = 1;
  CHECK_THROWS_AS(sigma_execute(env, uniform_layered_policy(1, 1, 1), StationaryPolicy::uniform(1, 1), p, rng, 0, 1000),
                  EpisodeOverflow);
}

TEST_CASE("episode log text round trip") {
  EpisodeLog log;
  log.episode = 4;
  log.steps = {test::step_of(0, 1, 2, 0.25), test::step_of(2, 0, 1, 1.0 / 3.0, true, false, 1),
               test::step_of(1, 1, 3, 0.75, false, true, 2)};
  log.pre_switch_steps = 2;
  log.switched = true;
  log.switch_state = 1;
  log.terminal_cost = 9.0;
  log.incurred_cost = 0.25 + 1.0 / 3.0 + 0.75;
  log.stacked_cost = 0.25 + 1.0 / 3.0 + 9.0;
  const auto text = format_episode_log(log);
  const auto back = parse_episode_log(text);
  CHECK(format_episode_log(back) == text);
  REQUIRE(back.steps.size() == 3);
  CHECK(back.steps[1].cost == 1.0 / 3.0);
  CHECK_FALSE(back.steps[1].observed);
  CHECK_FALSE(back.steps[2].pre_switch);
  CHECK(back.stacked_cost == log.stacked_cost);
  CHECK_THROWS_AS(parse_episode_log("1 2 3"), InvalidArgument);
  const auto pairs = pre_switch_pairs(log);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
}
