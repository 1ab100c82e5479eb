#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ssp/errors.hpp"
#include "ssp/estimation.hpp"

using namespace ssp;
using test::step_of;

TEST_CASE("episode that reaches the goal at once counts one step") {
  ConfidenceState conf(2, 2, 1.0);
  EpisodeLog log;
  log.steps = {step_of(0, 1, 2, 0.4)};
  log.pre_switch_steps = 1;
  conf.update(log, Feedback::StochasticCosts, {});
  CHECK(conf.visits(0, 1) == 1);
  CHECK(conf.transitions(0, 1, 2) == 1);
  CHECK(conf.cost_observations(0, 1) == 1);
  CHECK(conf.cost_sum(0, 1) == doctest::Approx(0.4));
  CHECK(conf.visits(0, 0) == 0);
  CHECK(conf.visits(1, 0) + conf.visits(1, 1) == 0);
  CHECK(conf.episodes_seen() == 1);
}

TEST_CASE("three pre-switch visits add three cost observations") {
  ConfidenceState conf(2, 1, 1.0);
  EpisodeLog log;
  log.steps = {step_of(0, 0, 0, 0.2), step_of(0, 0, 1, 0.3), step_of(1, 0, 0, 0.9), step_of(0, 0, 1, 0.5),
               step_of(1, 0, 0, 1.0, false), step_of(0, 0, 2, 1.0, false)};
  log.pre_switch_steps = 4;
  log.switched = true;
  conf.update(log, Feedback::StochasticCosts, {});
  CHECK(conf.visits(0, 0) == 3);
  CHECK(conf.cost_observations(0, 0) == 3);
  CHECK(conf.cost_sum(0, 0) == doctest::Approx(1.0));
  CHECK(conf.visits(1, 0) == 1);
  CHECK(conf.transitions(0, 0, 2) == 0);
  CHECK(conf.empirical(0, 0, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(conf.empirical(1, 0, 1) == 0.0);
}

TEST_CASE("bandit feedback counts one observation per visited pair") {
  ConfidenceState conf(2, 1, 1.0);
  EpisodeLog log;
  log.steps = {step_of(0, 0, 0, 0.0, true, false), step_of(0, 0, 2, 0.0, true, false)};
  log.pre_switch_steps = 2;
  RevealedCosts revealed;
  revealed.visited[{0, 0}] = 0.6;
  conf.update(log, Feedback::Bandit, revealed);
  CHECK(conf.visits(0, 0) == 2);
  CHECK(conf.cost_observations(0, 0) == 1);
  CHECK(conf.cost_sum(0, 0) == doctest::Approx(0.6));
  CHECK(conf.cost_observations(1, 0) == 0);

  RevealedCosts missing;
  CHECK_THROWS_AS(conf.update(log, Feedback::Bandit, missing), FeedbackMismatch);
}

TEST_CASE("full information observes the whole table") {
  ConfidenceState conf(2, 1, 1.0);
  EpisodeLog log;
  log.steps = {step_of(0, 0, 2, 0.0, true, false)};
  log.pre_switch_steps = 1;
  RevealedCosts revealed;
  revealed.full = std::vector<double>{0.3, 0.8};
  conf.update(log, Feedback::FullInformation, revealed);
  CHECK(conf.cost_observations(1, 0) == 1);
  CHECK(conf.cost_sum(1, 0) == doctest::Approx(0.8));

  ConfidenceState visited_only(2, 1, 1.0);
  visited_only.set_full_info_counts_all_pairs(false);
  visited_only.update(log, Feedback::FullInformation, revealed);
  CHECK(visited_only.cost_observations(0, 0) == 1);
  CHECK(visited_only.cost_observations(1, 0) == 0);

  CHECK_THROWS_AS(conf.update(log, Feedback::FullInformation, {}), FeedbackMismatch);
  CHECK_THROWS_AS(conf.update(log, Feedback::StochasticCosts, {}), FeedbackMismatch);
}

TEST_CASE("radii follow the Bernstein form") {
  ConfidenceState conf(1, 1, 0.5);
  EpisodeLog log;
  for (int i = 0; i < 3; ++i) log.steps.push_back(step_of(0, 0, 0));
  log.steps.push_back(step_of(0, 0, 1));
  log.pre_switch_steps = 4;
  conf.update(log, Feedback::StochasticCosts, {});
  const double alpha = 0.5 / 4.0;
  CHECK(conf.alpha_prime(0, 0) == doctest::Approx(alpha));
  CHECK(conf.radius(0, 0, 0) == doctest::Approx(4.0 * std::sqrt(0.75 * alpha) + 28.0 * alpha));
  CHECK(radius_star(conf, 0, 0, 0.0) == doctest::Approx(136.0 * alpha));
  CHECK(radius_star(conf, 0, 0, 0.3) == doctest::Approx(8.0 * std::sqrt(0.3 * alpha) + 136.0 * alpha));

  const ConfidenceState empty(1, 1, 0.5);
  CHECK(empty.alpha_prime(0, 0) == doctest::Approx(0.5));
  CHECK(radius_star(empty, 0, 0, 0.2) == doctest::Approx(8.0 * std::sqrt(0.2 * 0.5) + 136.0 * 0.5));
}

TEST_CASE("optimistic cost estimator") {
  CHECK(optimistic_cost(0.0, 0, 1.0) == 0.0);
  CHECK(optimistic_cost(1e9, 1'000'000'000, 1e-3) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(optimistic_cost(30.0, 100, 1.0) ==
        doctest::Approx(0.3 - 2.0 * std::sqrt(0.3 * 0.01) - 0.07));
  CHECK(optimistic_cost(0.5, 1, 1.0) == 0.0);
}

TEST_CASE("membership of stacked rows") {
  const SspInstance m(2, 1, 0, {0.5, 0.3, 0.2, 0.1, 0.1, 0.8});
  // Radii of at least 28 iota / max(1, 0) cover every row of [0, 1] values.
  const ConfidenceState wide(2, 1, 1.0);
  CHECK(covers(wide, m, 0.6));
  // Stay mass above gamma.
  const std::vector<double> heavy{0.5, 0.3, 0.0, 0.0, 0.2};
  CHECK_FALSE(conf_membership(wide, 0.6, 0, 0, heavy));
  const std::vector<double> fine{0.3, 0.18, 0.2, 0.12, 0.2};
  CHECK(conf_membership(wide, 0.6, 0, 0, fine));
  CHECK_FALSE(conf_membership(wide, 0.6, 0, 0, std::vector<double>{0.3, 0.18, 0.2, 0.12}));
}

TEST_CASE("confidence state JSON round trip") {
  ConfidenceState conf(2, 2, 0.7);
  EpisodeLog log;
  log.steps = {step_of(0, 1, 1, 0.25), step_of(1, 0, 2, 0.75)};
  log.pre_switch_steps = 2;
  conf.update(log, Feedback::StochasticCosts, {});
  const auto back = ConfidenceState::from_json(conf.to_json());
  CHECK(back.to_json() == conf.to_json());
  CHECK(back.radius(0, 1, 1) == conf.radius(0, 1, 1));
}

TEST_CASE("stacked cost estimate puts c_f on the terminal layer") {
  ConfidenceState conf(1, 2, 0.01);
  const auto table = stacked_cost_estimate(conf, 3, 4.5);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t l = 0; l < 3; ++l) CHECK(table(0, a, l) == 0.0);
    CHECK(table(0, a, 3) == 4.5);
  }
}
