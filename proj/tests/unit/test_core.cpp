#include <cmath>

#include "doctest.h"
#include "ssp/core.hpp"
#include "ssp/errors.hpp"
#include "ssp/verify/oracles.hpp"

using namespace ssp;

namespace {

// Three states, two actions; rows end with the goal column.
SspInstance three_state() {
  return SspInstance(3, 2, 0, {0.2, 0.5, 0.1, 0.2, 0.0, 0.0, 0.6, 0.4, 0.1, 0.1, 0.3, 0.5,
                               0.7, 0.0, 0.0, 0.3, 0.0, 0.4, 0.4, 0.2, 0.3, 0.3, 0.3, 0.1});
}
CostFunction three_cost() { return CostFunction(3, 2, {0.5, 0.9, 0.2, 1.0, 0.7, 0.3}, 0.2); }

}  // namespace

TEST_CASE("single step and geometric chains") {
  const SspInstance jump(1, 1, 0, {0.0, 1.0});
  const auto v = policy_evaluation(jump, StationaryPolicy::uniform(1, 1), CostFunction::constant(1, 1, 0.5));
  CHECK(v.v[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(v.q[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(hitting_time(jump, StationaryPolicy::uniform(1, 1))[0] == doctest::Approx(2.0));

  const SspInstance loop(1, 1, 0, {0.5, 0.5});
  CHECK(policy_evaluation(loop, StationaryPolicy::uniform(1, 1), CostFunction::constant(1, 1, 1.0)).v[0] ==
        doctest::Approx(2.0).epsilon(1e-11));
  CHECK(hitting_time(loop, StationaryPolicy::uniform(1, 1))[0] == doctest::Approx(3.0).epsilon(1e-11));
  const auto q = occupancy_measure(loop, StationaryPolicy::uniform(1, 1));
  CHECK(q[0] == doctest::Approx(2.0).epsilon(1e-11));
}

TEST_CASE("deterministic line") {
  const SspInstance line(2, 1, 0, {0.0, 1.0, 0.0, 0.0, 0.0, 1.0});
  const auto unit = CostFunction::constant(2, 1, 1.0);
  const auto opt = optimal_proper_policy(line, unit);
  CHECK(opt.v[0] == doctest::Approx(2.0));
  CHECK(opt.v[1] == doctest::Approx(1.0));
  const auto q = occupancy_measure(line, opt.policy);
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[1] == doctest::Approx(1.0));
  const auto key = key_params(line, unit);
  CHECK(key.b_star == doctest::Approx(2.0));
  CHECK(key.t_star == doctest::Approx(3.0));
  CHECK(key.t_max == doctest::Approx(3.0));
  CHECK(key.diameter == doctest::Approx(3.0));
}

TEST_CASE("goal-adjacent state has diameter two") {
  const SspInstance jump(1, 2, 0, {0.0, 1.0, 0.5, 0.5});
  const auto key = key_params(jump, CostFunction::constant(1, 2, 1.0));
  CHECK(key.diameter == doctest::Approx(2.0));
  CHECK(key.fast_policy.mode(0) == 0);
}

TEST_CASE("policy evaluation matches the frozen dense solve") {
  // Frozen from oracle::dense_policy_values; the oracle is re-run alongside.
  const auto m = three_state();
  const auto c = three_cost();
  const auto pi = StationaryPolicy::uniform(3, 2);
  const double frozen[3] = {2.21681415929204, 1.93141592920354, 2.32079646017699};
  const auto dense = oracle::dense_policy_values(m, pi, c);
  const auto vals = policy_evaluation(m, pi, c);
  for (int s = 0; s < 3; ++s) {
    CHECK(std::abs(dense[s] - frozen[s]) < 1e-13);
    CHECK(std::abs(vals.v[s] - frozen[s]) < 1e-8);
  }
  CHECK(bellman_residual(m, pi, c, vals) <= 1e-10);
}

TEST_CASE("optimal policy matches the frozen enumeration") {
  const auto m = three_state();
  const auto c = three_cost();
  const double frozen[3] = {1.29813664596273, 0.81055900621118, 1.33229813664596};
  const auto enumerated = oracle::enumerated_optimal_values(m, c);
  const auto opt = optimal_proper_policy(m, c);
  CHECK(opt.policy.is_deterministic());
  for (int s = 0; s < 3; ++s) {
    CHECK(std::abs(enumerated[s] - frozen[s]) < 1e-13);
    CHECK(std::abs(opt.v[s] - frozen[s]) < 1e-10);
  }
}

TEST_CASE("occupancy matches the frozen flow solve") {
  const auto m = three_state();
  const double frozen[6] = {0.833333333333333, 0.833333333333333, 0.420353982300885,
                            0.420353982300885, 0.545722713864307, 0.545722713864307};
  const auto q = occupancy_measure(m, StationaryPolicy::uniform(3, 2));
  for (int i = 0; i < 6; ++i) CHECK(std::abs(q[i] - frozen[i]) < 1e-9);
}

TEST_CASE("cheap slow policy has T* above D") {
  // s0: action 0 loops with probability 0.9 at cost 0.05, action 1 jumps to g at cost 1.
  // s1: both actions jump to g at cost 1, so B* = 1.
  const SspInstance m(2, 2, 0, {0.9, 0.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0});
  const CostFunction c(2, 2, {0.05, 1.0, 1.0, 1.0}, 0.05);
  const auto enumerated = oracle::enumerated_optimal_values(m, c);
  CHECK(enumerated[0] == doctest::Approx(0.5));
  const auto key = key_params(m, c);
  CHECK(key.b_star == doctest::Approx(1.0));
  CHECK(key.t_star == doctest::Approx(11.0));
  CHECK(key.t_max == doctest::Approx(11.0));
  CHECK(key.diameter == doctest::Approx(2.0));
  CHECK(key.t_star > key.diameter);
}

TEST_CASE("uniform cost makes the optimal policy the fast policy") {
  Rng rng(5);
  const auto m = oracle::random_instance(4, 3, 0.1, rng);
  const auto key = key_params(m, CostFunction::constant(4, 3, 1.0));
  CHECK(key.optimal_policy.probs() == key.fast_policy.probs());
}

TEST_CASE("error paths") {
  // Self-loop without goal access.
  const SspInstance trap(1, 1, 0, {1.0, 0.0});
  CHECK_FALSE(is_proper(trap, StationaryPolicy::uniform(1, 1)));
  CHECK_THROWS_AS(policy_evaluation(trap, StationaryPolicy::uniform(1, 1), CostFunction::constant(1, 1, 1.0)),
                  NonProperPolicy);
  CHECK_THROWS_AS(optimal_proper_policy(trap, CostFunction::constant(1, 1, 1.0)), NoProperPolicy);
  const SspInstance jump(1, 1, 0, {0.0, 1.0});
  CHECK_THROWS_AS(key_params(jump, CostFunction::constant(1, 1, 0.5)), AssumptionViolation);
  CHECK_THROWS_AS(SspInstance(1, 1, 0, {0.3, 0.3}), InvalidArgument);
  CHECK_THROWS_AS(CostFunction(1, 1, {1.5}, 0.0), InvalidArgument);
}

TEST_CASE("zero-cost loop that undercuts every proper policy") {
  // Action 0 self-loops at zero cost, action 1 reaches the goal at cost 1.
  const SspInstance m(1, 2, 0, {1.0, 0.0, 0.0, 1.0});
  CHECK_THROWS_AS(optimal_proper_policy(m, CostFunction(1, 2, {0.0, 1.0}, 0.0)), NoProperPolicy);
  const auto opt = optimal_proper_policy(m, CostFunction(1, 2, {0.1, 1.0}, 0.1));
  CHECK(opt.policy.mode(0) == 1);
  CHECK(opt.v[0] == doctest::Approx(1.0));
}

TEST_CASE("instance JSON round trip") {
  const auto m = three_state();
  const auto c = three_cost();
  const auto [m2, c2] = instance_from_json(instance_to_json(m, c));
  CHECK(m2.transition() == m.transition());
  CHECK(c2.values() == c.values());
  CHECK(c2.c_min() == c.c_min());
  CHECK(m2.init_state() == m.init_state());
}
