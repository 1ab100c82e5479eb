#include <cmath>

#include "doctest.h"
#include "ssp/env.hpp"
#include "ssp/errors.hpp"

using namespace ssp;

TEST_CASE("line generator has diameter n + 1") {
  for (std::size_t n : {2, 4}) {
    EnvSpec spec;
    spec.generator = "line";
    spec.length = n;
    spec.uniform_cost = 1.0;
    const auto gen = generate_instance(spec);
    CHECK(gen.instance.num_states() == n);
    CHECK(gen.instance.prob(0, 0, 1) == 1.0);
    CHECK(gen.instance.prob(n - 1, 0, n) == 1.0);
    const auto key = key_params(gen.instance, gen.mean_cost);
    CHECK(key.diameter == doctest::Approx(static_cast<double>(n + 1)));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  EnvSpec spec;
  spec.num_states = 5;
  spec.num_actions = 2;
  spec.p_goal = 0.1;
  spec.seed = 42;
  const auto a = generate_instance(spec);
  const auto b = generate_instance(spec);
  CHECK(a.instance.transition() == b.instance.transition());
  CHECK(a.mean_cost.values() == b.mean_cost.values());
  spec.seed = 43;
  CHECK(generate_instance(spec).instance.transition() != a.instance.transition());
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t act = 0; act < 2; ++act) CHECK(a.instance.prob(s, act, 5) >= 0.1 - 1e-12);
}

TEST_CASE("gridworld rows are distributions") {
  EnvSpec spec;
  spec.generator = "gridworld";
  spec.width = 3;
  spec.height = 3;
  spec.uniform_cost = 1.0;
  const auto gen = generate_instance(spec);
  CHECK(gen.instance.num_states() == 8);
  CHECK(gen.instance.num_actions() == 4);
}

TEST_CASE("unusable specs fail loudly") {
  EnvSpec spec;
  spec.generator = "maze";
  CHECK_THROWS_AS(generate_instance(spec), ConfigError);
  EnvSpec cheap;
  cheap.generator = "line";
  cheap.length = 1;
  cheap.uniform_cost = 0.2;
  CHECK_THROWS_AS(generate_instance(cheap, 3), GenerationFailure);
  CHECK_THROWS_AS(env_spec_from_json(nlohmann::json{{"colour", 1}}), ConfigError);
}

TEST_CASE("env spec JSON round trip") {
  EnvSpec spec;
  spec.generator = "gridworld";
  spec.slip = 0.2;
  spec.cost_tables = {{0.1, 0.2}, {0.3, 0.4}};
  spec.seed = 17;
  const auto back = env_spec_from_json(env_spec_to_json(spec));
  CHECK(env_spec_to_json(back) == env_spec_to_json(spec));
}

TEST_CASE("deterministic rows fix the next state") {
  EnvSpec spec;
  spec.generator = "line";
  spec.length = 3;
  spec.uniform_cost = 1.0;
  SimulatedEnvironment env(generate_instance(spec), Setting::StochasticCosts, 1);
  env.begin_episode(1);
  CHECK(env.step(0).next == 1);
  CHECK(env.step(1).next == 1);
  CHECK(env.step(0).next == 2);
  const auto last = env.step(0);
  CHECK(last.next == 3);
  CHECK(last.observed.has_value());
  CHECK(env.at_goal());
}

TEST_CASE("episode protocol is enforced") {
  EnvSpec spec;
  spec.generator = "line";
  spec.length = 1;
  spec.uniform_cost = 1.0;
  SimulatedEnvironment env(generate_instance(spec), Setting::AdvFull, 1);
  CHECK_THROWS_AS(env.step(0), EpisodeOrder);
  env.begin_episode(1);
  CHECK_THROWS_AS(env.reveal({}), EpisodeOrder);
  CHECK_THROWS_AS(env.begin_episode(2), EpisodeOrder);
  const auto out = env.step(0);
  CHECK_FALSE(out.observed.has_value());
  env.reveal({{0, 0}});
  CHECK_THROWS_AS(env.reveal({{0, 0}}), DoubleReveal);
  CHECK_THROWS_AS(env.begin_episode(1), EpisodeOrder);
  CHECK_NOTHROW(env.begin_episode(2));
}

TEST_CASE("reveal matches the feedback type") {
  EnvSpec spec;
  spec.num_states = 3;
  spec.num_actions = 2;
  spec.p_goal = 0.3;
  spec.seed = 2;
  spec.cost_tables = {{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {0.9, 0.8, 0.7, 0.6, 0.5, 0.4}};
  const auto gen = generate_instance(spec);

  SimulatedEnvironment full(gen, Setting::AdvFull, 3);
  for (std::size_t k = 1; k <= 4; ++k) {
    full.begin_episode(k);
    while (!full.at_goal()) full.step(0);
    const auto revealed = full.reveal({});
    REQUIRE(revealed.full.has_value());
    CHECK(*revealed.full == spec.cost_tables[(k - 1) % 2]);
    CHECK(full.adversary_costs(k) == spec.cost_tables[(k - 1) % 2]);
  }

  SimulatedEnvironment bandit(gen, Setting::AdvBandit, 3);
  bandit.begin_episode(1);
  while (!bandit.at_goal()) bandit.step(1);
  const auto revealed = bandit.reveal({{0, 1}});
  CHECK_FALSE(revealed.full.has_value());
  CHECK(revealed.visited.size() == 1);
  CHECK(revealed.visited.at({0, 1}) == 0.2);
  CHECK(revealed.visited.count({1, 0}) == 0);
}

TEST_CASE("fixed-sequence adversary holds its last table") {
  EnvSpec spec;
  spec.num_states = 2;
  spec.num_actions = 1;
  spec.p_goal = 0.5;
  spec.uniform_cost = 1.0;
  spec.adversary = "fixed-sequence";
  spec.cost_tables = {{0.1, 0.2}, {0.3, 0.4}};
  SimulatedEnvironment env(generate_instance(spec), Setting::AdvFull, 1);
  CHECK(env.adversary_costs(1) == spec.cost_tables[0]);
  CHECK(env.adversary_costs(2) == spec.cost_tables[1]);
  CHECK(env.adversary_costs(9) == spec.cost_tables[1]);
}

TEST_CASE("Bernoulli cost mean within three standard errors") {
  Rng rng(77);
  const std::size_t n = 100000;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = sample_cost("bernoulli", 0.5, 0.0, rng);
    CHECK((c == 0.0 || c == 1.0));
    total += c;
  }
  CHECK(std::abs(total / n - 0.5) <= 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));

  const double mean_u = [&] {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += sample_cost("uniform", 0.6, 0.2, rng);
    return t / n;
  }();
  CHECK(std::abs(mean_u - 0.6) <= 3.0 * (0.4 / std::sqrt(3.0)) / std::sqrt(static_cast<double>(n)));
  CHECK(sample_cost("fixed", 0.37, 0.1, rng) == 0.37);
  CHECK_THROWS_AS(sample_cost("gaussian", 0.5, 0.1, rng), ConfigError);
}
