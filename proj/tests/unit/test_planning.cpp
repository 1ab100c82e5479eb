#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ssp/errors.hpp"
#include "ssp/planning.hpp"
#include "ssp/verify/oracles.hpp"

using namespace ssp;

namespace {

PolytopeRow free_row(std::vector<double> lower, std::vector<double> upper) {
  PolytopeRow row;
  row.group.assign(lower.size(), -1);
  row.lower = std::move(lower);
  row.upper = std::move(upper);
  return row;
}

// One state, one action: 4 of 10 samples stay, 6 reach the goal.
ConfidenceState ten_samples() {
  ConfidenceState conf(1, 1, 0.1);
  EpisodeLog log;
  for (int i = 0; i < 10; ++i) log.steps.push_back(test::step_of(0, 0, i < 4 ? 0 : 1));
  conf.update(log, Feedback::StochasticCosts, {});
  return conf;
}

}  // namespace

TEST_CASE("degenerate intervals return the empirical point") {
  const auto row = free_row({0.2, 0.3, 0.5}, {0.2, 0.3, 0.5});
  const std::vector<double> objective{1.0, -2.0, 0.5};
  const auto result = polytope_linear_opt(row, objective, Direction::Minimize);
  CHECK(result.point[0] == doctest::Approx(0.2));
  CHECK(result.point[1] == doctest::Approx(0.3));
  CHECK(result.point[2] == doctest::Approx(0.5));
  CHECK(result.value == doctest::Approx(0.2 - 0.6 + 0.25));
}

TEST_CASE("greedy fill pushes mass toward the cheaper destination") {
  const auto row = free_row({0.1, 0.2}, {0.7, 0.9});
  const std::vector<double> objective{0.0, 1.0};
  const auto low = polytope_linear_opt(row, objective, Direction::Minimize);
  CHECK(low.point[0] == doctest::Approx(0.7));
  CHECK(low.point[1] == doctest::Approx(0.3));
  const auto high = polytope_linear_opt(row, objective, Direction::Maximize);
  CHECK(high.point[0] == doctest::Approx(0.1));
  CHECK(high.point[1] == doctest::Approx(0.9));
}

TEST_CASE("group caps bind") {
  PolytopeRow row;
  row.lower = {0.0, 0.0, 0.0};
  row.upper = {1.0, 1.0, 1.0};
  row.group = {0, 1, -1};
  row.cap[0] = 0.3;
  row.cap[1] = 0.2;
  const std::vector<double> objective{-1.0, -2.0, 5.0};
  const auto result = polytope_linear_opt(row, objective, Direction::Minimize);
  CHECK(result.point[1] == doctest::Approx(0.2));
  CHECK(result.point[0] == doctest::Approx(0.3));
  CHECK(result.point[2] == doctest::Approx(0.5));
  CHECK(polytope_contains(row, result.point));
  CHECK(result.value == doctest::Approx(oracle::enumerated_linear_opt(row, objective, Direction::Minimize)));
}

TEST_CASE("infeasible rows are rejected") {
  CHECK_THROWS_AS(check_feasible(free_row({0.6, 0.6}, {0.7, 0.7})), InfeasibleRow);
  CHECK_THROWS_AS(check_feasible(free_row({0.1, 0.1}, {0.2, 0.3})), InfeasibleRow);
  CHECK_THROWS_AS(check_feasible(free_row({0.5, 0.1}, {0.4, 0.9})), InfeasibleRow);
  CHECK_NOTHROW(check_feasible(free_row({0.1, 0.1}, {0.5, 0.5})));
}

TEST_CASE("confidence row vertices match the frozen enumeration") {
  const auto polys = PolytopeSet::from_confidence(ten_samples(), 0.75);
  const auto vertices = oracle::polytope_vertices(polys.row(0, 0));
  const double frozen[4][3] = {{0.699737, 0.233246, 0.0670178},
                               {0.699737, 0.0, 0.300263},
                               {0.0, 0.233246, 0.766754},
                               {0.0, 0.0, 1.0}};
  REQUIRE(vertices.size() == 4);
  for (const auto& f : frozen) {
    bool found = false;
    for (const auto& v : vertices) {
      bool same = true;
      for (int i = 0; i < 3; ++i) same = same && std::abs(v[i] - f[i]) < 1e-6;
      found = found || same;
    }
    CHECK(found);
  }
}

TEST_CASE("extended value iteration matches frozen robust values") {
  const auto polys = PolytopeSet::from_confidence(ten_samples(), 0.75);
  const LayeredTable pi(1, 1, 3, 1.0);
  LayeredTable cost(1, 1, 3, 0.5);
  cost(0, 0, 2) = 3.0;
  const double frozen_min[3] = {0.5, 0.5, 3.0};
  const double frozen_max[3] = {4.76901173661985, 3.9956148427984, 3.0};
  const auto low = extended_value_iteration(polys, pi, cost, 1e-10, Direction::Minimize);
  const auto high = extended_value_iteration(polys, pi, cost, 1e-10, Direction::Maximize);
  const auto oracle_min = oracle::robust_vertex_evaluation(polys, pi, cost, Direction::Minimize);
  const auto oracle_max = oracle::robust_vertex_evaluation(polys, pi, cost, Direction::Maximize);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(std::abs(oracle_min.v.at(0, l) - frozen_min[l]) < 1e-12);
    CHECK(std::abs(oracle_max.v.at(0, l) - frozen_max[l]) < 1e-12);
    CHECK(std::abs(low.v.at(0, l) - frozen_min[l]) < 1e-9);
    CHECK(std::abs(high.v.at(0, l) - frozen_max[l]) < 1e-9);
  }
  CHECK(low.sweeps <= 2 * low.sweep_bound);
}

TEST_CASE("dilated bonus matches the frozen robust value") {
  const auto polys = PolytopeSet::from_confidence(ten_samples(), 0.75);
  const LayeredTable pi(1, 1, 3, 1.0);
  LayeredTable b(1, 1, 3, 0.2);
  b(0, 0, 2) = 0.0;
  const double frozen[3] = {1.44997173361813, 0.753930312009676, 0.0};
  const auto dilated = dilated_bonus(polys, pi, b, 20.0, 1e-10);
  CHECK(dilated.rho == doctest::Approx(0.05));
  for (std::size_t l = 0; l < 3; ++l) CHECK(std::abs(dilated.bonus(0, 0, l) - frozen[l]) < 1e-9);
  CHECK_THROWS_AS(dilated_bonus(polys, pi, b, 2.0, 1e-10), DilationTooLarge);
}

TEST_CASE("singleton set reproduces stacked evaluation") {
  Rng rng(8);
  const auto m = oracle::random_instance(3, 2, 0.1, rng);
  const std::size_t H = 3;
  const auto polys = PolytopeSet::singleton(m, 0.8);
  const auto pi = oracle::random_layered_policy(3, 2, H, rng);
  const auto cost = stacked_cost(oracle::random_cost(3, 2, 0.1, rng), H, 4.0);
  const auto q = optimistic_q(polys, pi, cost, 1e-10);
  const auto exact = stacked_policy_evaluation(StackedMdp(m, 0.8, H), pi, cost);
  for (std::size_t i = 0; i < q.q.data().size(); ++i) CHECK(std::abs(q.q.data()[i] - exact.q.data()[i]) < 1e-8);

  const auto zero = optimistic_q(polys, pi, LayeredTable(3, 2, H + 1, 0.0), 1e-10);
  CHECK(zero.q.max_abs() == 0.0);
  const auto no_bonus = dilated_bonus(polys, pi, LayeredTable(3, 2, H + 1, 0.0), 50.0, 1e-10);
  CHECK(no_bonus.bonus.max_abs() == 0.0);
}

TEST_CASE("optimistic values lie below every sampled member") {
  Rng rng(9);
  const auto m = oracle::random_instance(2, 2, 0.1, rng);
  const std::size_t H = 2;
  ConfidenceState conf(2, 2, 0.05);
  EpisodeLog log;
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a)
      for (int i = 0; i < 30; ++i) log.steps.push_back(test::step_of(s, a, rng.categorical(m.row(s, a))));
  conf.update(log, Feedback::StochasticCosts, {});
  const auto polys = PolytopeSet::from_confidence(conf, 0.7);
  const auto pi = oracle::random_layered_policy(2, 2, H, rng);
  const auto cost = stacked_cost(oracle::random_cost(2, 2, 0.1, rng), H, 3.0);
  const auto q = optimistic_q(polys, pi, cost, 1e-10);
  for (int i = 0; i < 100; ++i) {
    const auto member = oracle::random_member(polys, H, rng);
    const auto values = stacked_policy_evaluation(member, pi, cost);
    for (std::size_t j = 0; j < q.q.data().size(); ++j) CHECK(q.q.data()[j] <= values.q.data()[j] + 1e-9);
  }
}

TEST_CASE("visit bounds") {
  Rng rng(10);
  const auto m = oracle::random_instance(2, 2, 0.2, rng);
  const std::size_t H = 2;
  const auto polys = PolytopeSet::singleton(m, 0.75);
  const auto pi = oracle::random_layered_policy(2, 2, H, rng);
  const auto mdp = StackedMdp(m, 0.75, H);
  for (std::size_t l = 0; l < H; ++l)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        const auto bounds = visit_prob_bounds(polys, pi, 0, s, a, l);
        const double exact = visit_and_return(mdp, pi, 0, s, a, l).visit;
        CHECK(bounds.upper == doctest::Approx(exact).epsilon(1e-8));
        CHECK(bounds.lower == doctest::Approx(exact).epsilon(1e-8));
      }

  // Deterministic first action from the initial state.
  LayeredTable fixed = pi;
  fixed(0, 0, 0) = 0.0;
  fixed(0, 1, 0) = 1.0;
  const ConfidenceState wide(2, 2, 0.5);
  const auto bounds = visit_prob_bounds(PolytopeSet::from_confidence(wide, 0.75), fixed, 0, 0, 1, 0);
  CHECK(bounds.upper == doctest::Approx(1.0));
  CHECK(bounds.lower == doctest::Approx(1.0));
}
