#include "ssp/verify/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "ssp/env.hpp"
#include "ssp/errors.hpp"
#include "ssp/estimation.hpp"
#include "ssp/learner.hpp"
#include "ssp/planning.hpp"
#include "ssp/sda.hpp"
#include "ssp/verify/checks.hpp"
#include "ssp/verify/oracles.hpp"

namespace ssp::verify {

std::size_t SuiteReport::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.pass; }));
}

namespace {

class Collector {
 public:
  Collector(SuiteReport& report, std::string suite) : report_(report), suite_(std::move(suite)) {}

  void le(const std::string& name, double value, double threshold) {
    report_.checks.push_back({suite_, name, value <= threshold, value, threshold});
  }
  void ge(const std::string& name, double value, double threshold) {
    report_.checks.push_back({suite_, name, value >= threshold, value, threshold});
  }
  void truth(const std::string& name, bool ok) { report_.checks.push_back({suite_, name, ok, ok ? 1.0 : 0.0, 1.0}); }

 private:
  SuiteReport& report_;
  std::string suite_;
};

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

StationaryPolicy random_policy(std::size_t S, std::size_t A, Rng& rng) {
  const auto t = oracle::random_layered_policy(S, A, 0, rng);
  return StationaryPolicy(S, A, t.data());
}

double max_diff(const std::vector<double>& x, const std::vector<double>& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

// ---------------------------------------------------------------------------

void ssp_core_suite(Collector& out, std::uint64_t seed) {
  {
    const SspInstance m(1, 1, 0, {0.0, 1.0});
    const auto v = policy_evaluation(m, StationaryPolicy::uniform(1, 1), CostFunction::constant(1, 1, 0.5));
    out.le("single-step-value", std::abs(v.v[0] - 0.5), 1e-12);
    out.le("single-step-hitting-time", std::abs(hitting_time(m, StationaryPolicy::uniform(1, 1))[0] - 2.0), 1e-12);
  }
  {
    const SspInstance m(1, 1, 0, {0.5, 0.5});
    const auto v = policy_evaluation(m, StationaryPolicy::uniform(1, 1), CostFunction::constant(1, 1, 1.0));
    out.le("geometric-value", std::abs(v.v[0] - 2.0), 1e-10);
    out.le("geometric-hitting-time", std::abs(hitting_time(m, StationaryPolicy::uniform(1, 1))[0] - 3.0), 1e-10);
  }
  {
    const SspInstance line(2, 1, 0, {0.0, 1.0, 0.0, 0.0, 0.0, 1.0});
    const auto key = key_params(line, CostFunction::constant(2, 1, 1.0));
    const double err = std::max({std::abs(key.b_star - 2.0), std::abs(key.t_star - 3.0), std::abs(key.t_max - 3.0),
                                 std::abs(key.diameter - 3.0)});
    out.le("line-key-params", err, 1e-10);
  }

  Rng rng(derive_seed(seed, 201));
  double eval_err = 0, residual = 0, opt_err = 0, opt_residual = 0, inner = 0, occ_err = 0, mono = 1e300;
  bool fast_match = true;
  for (int i = 0; i < 40; ++i) {
    const std::size_t S = draw(rng, 1, 4), A = draw(rng, 1, 3);
    const auto m = oracle::random_instance(S, A, 0.05 + 0.3 * rng.uniform(), rng);
    const auto c = oracle::random_cost(S, A, 0.1, rng);
    const auto pi = random_policy(S, A, rng);
    const auto vals = policy_evaluation(m, pi, c);
    eval_err = std::max(eval_err, max_diff(vals.v, oracle::dense_policy_values(m, pi, c)));
    residual = std::max(residual, bellman_residual(m, pi, c, vals));

    const auto opt = optimal_proper_policy(m, c);
    opt_err = std::max(opt_err, max_diff(opt.v, oracle::enumerated_optimal_values(m, c)));
    for (std::size_t s = 0; s < S; ++s) {
      double best = 1e300;
      for (std::size_t a = 0; a < A; ++a) {
        double q = c(s, a);
        for (std::size_t t = 0; t < S; ++t) q += m.prob(s, a, t) * opt.v[t];
        best = std::min(best, q);
      }
      opt_residual = std::max(opt_residual, std::abs(best - opt.v[s]));
    }

    const auto q = occupancy_measure(m, pi);
    double dot = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) dot += q[k] * c.values()[k];
    inner = std::max(inner, std::abs(dot - vals.v[m.init_state()]));
    occ_err = std::max(occ_err, max_diff(q, oracle::dense_occupancy(m, pi, m.init_state())));

    std::vector<double> bigger = c.values();
    for (double& x : bigger) x = std::min(1.0, x + 0.2 * rng.uniform());
    const auto vb = policy_evaluation(m, pi, CostFunction(S, A, bigger, 0.1));
    for (std::size_t s = 0; s < S; ++s) mono = std::min(mono, vb.v[s] - vals.v[s]);

    const auto unit = optimal_proper_policy(m, CostFunction::constant(S, A, 1.0));
    const auto half = optimal_proper_policy(m, CostFunction::constant(S, A, 0.5));
    fast_match = fast_match && unit.policy.probs() == half.policy.probs();
  }
  out.le("policy-evaluation-vs-dense", eval_err, 1e-8);
  out.le("bellman-residual", residual, 1e-10);
  out.le("optimal-vs-enumeration", opt_err, 1e-8);
  out.le("optimal-bellman-residual", opt_residual, 1e-10);
  out.le("occupancy-inner-product", inner, 1e-8);
  out.le("occupancy-vs-dense", occ_err, 1e-8);
  out.ge("monotone-in-cost", mono, -1e-10);
  out.truth("uniform-cost-optimal-is-fast", fast_match);

  // Hitting time against rollouts.
  const auto m = oracle::random_instance(3, 2, 0.2, rng);
  const auto pi = random_policy(3, 2, rng);
  const double t = hitting_time(m, pi)[0];
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int e = 0; e < n; ++e) {
    std::size_t s = 0;
    double steps = 0.0;
    while (s != m.goal()) {
      const std::size_t a = rng.categorical(pi.row(s));
      s = rng.categorical(m.row(s, a));
      steps += 1.0;
    }
    sum += 1.0 + steps;
    sum2 += (1.0 + steps) * (1.0 + steps);
  }
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  out.le("hitting-time-monte-carlo-z", std::abs(mean - t) / se, 3.0);
}

// ---------------------------------------------------------------------------

void sda_suite(Collector& out, std::uint64_t seed) {
  {
    const auto p = sda_params(100, 0.1, 2.0, 4.0);
    out.le("params-example", std::abs(p.gamma - 0.875) + std::abs(p.terminal_cost - 61.0) +
                                 std::abs(static_cast<double>(p.num_layers) - 13.0), 0.0);
    out.le("gamma-at-unit-tmax", std::abs(sda_params(1, 0.5, 1.0, 1.0).gamma - 0.5), 0.0);
    out.le("layers-for-two", static_cast<double>(layers_for(2.0, 1)), 1.0);
  }

  const auto bounds = sda_bound_check(15, seed);
  out.ge("value-bound-slack", bounds.value_slack, -1e-8);
  out.ge("mirror-gap-slack", bounds.gap_slack, -1e-8);
  out.ge("layer-decay-slack", bounds.decay_slack, -1e-8);
  out.le("stacked-evaluation-vs-dense", bounds.oracle_error, 1e-8);

  Rng rng(derive_seed(seed, 202));
  double row_sum = 0.0, hit_slack = 1e300, identity = 0.0, occ_err = 0.0, residual = 0.0;
  for (int i = 0; i < 15; ++i) {
    const std::size_t S = draw(rng, 1, 4), A = draw(rng, 1, 3), H = draw(rng, 1, 4);
    const double gamma = 0.5 + 0.45 * rng.uniform();
    const auto m = oracle::random_instance(S, A, 0.05 + 0.2 * rng.uniform(), rng);
    const StackedMdp stacked(m, gamma, H);
    std::vector<double> row(2 * S + 1);
    for (std::size_t l = 0; l < H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          stacked.fill_row(s, a, l, row);
          double total = 0.0;
          for (double p : row) total += p;
          row_sum = std::max(row_sum, std::abs(total - 1.0));
        }
    const auto pi = oracle::random_layered_policy(S, A, H, rng);
    const auto unit = stacked_cost(CostFunction::constant(S, A, 1.0), H, 0.0);
    const auto v = stacked_policy_evaluation(stacked, pi, unit);
    residual = std::max(residual, stacked_residual(stacked, pi, unit, v));
    for (std::size_t s = 0; s < S; ++s)
      hit_slack = std::min(hit_slack, static_cast<double>(H) / (1.0 - gamma) + 1.0 - v.v.at(s, 0));

    const auto occ = stacked_occupancy(stacked, pi, 0);
    occ_err = std::max(occ_err, max_diff(occ.data(), oracle::dense_stacked_occupancy(stacked.to_kernel(), pi, 0).data()));
    for (std::size_t l = 0; l <= H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          const auto xr = visit_and_return(stacked, pi, 0, s, a, l);
          identity = std::max(identity, std::abs(occ(s, a, l) - xr.visit / (1.0 - xr.ret)));
        }
  }
  out.le("stacked-rows-sum-to-one", row_sum, 1e-12);
  out.le("stacked-residual", residual, 1e-10);
  out.ge("stacked-hitting-bound-slack", hit_slack, -1e-8);
  out.le("stacked-occupancy-vs-dense", occ_err, 1e-8);
  out.le("visit-return-identity", identity, 1e-8);

  // Trajectory law of the executor against the stacked occupancy.
  EnvSpec spec;
  spec.num_states = 3;
  spec.num_actions = 2;
  spec.p_goal = 0.1;
  spec.seed = derive_seed(seed, 203);
  const auto gen = generate_instance(spec);
  const auto key = key_params(gen.instance, gen.mean_cost);
  SdaParams sda;
  sda.gamma = 0.8;
  sda.num_layers = 3;
  sda.terminal_cost = 5.0;
  const auto pi = oracle::random_layered_policy(3, 2, 3, rng);
  const auto occ = stacked_occupancy(StackedMdp(gen.instance, sda), pi, gen.instance.init_state());
  SimulatedEnvironment env(gen, Setting::StochasticCosts, derive_seed(seed, 204));
  const std::size_t n = 20000;
  std::vector<double> sum(pi.data().size(), 0.0), sum2(pi.data().size(), 0.0), count(pi.data().size());
  for (std::size_t k = 1; k <= n; ++k) {
    env.begin_episode(k);
    const auto log = sigma_execute(env, pi, key.fast_policy, sda, rng, k);
    env.reveal(pre_switch_pairs(log));
    std::fill(count.begin(), count.end(), 0.0);
    for (const auto& st : log.steps)
      if (st.pre_switch) count[pi.index(st.state, st.action, st.layer)] += 1.0;
    for (std::size_t i = 0; i < count.size(); ++i) sum[i] += count[i], sum2[i] += count[i] * count[i];
  }
  std::size_t within = 0, total = 0;
  for (std::size_t l = 0; l < sda.num_layers; ++l)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        const std::size_t i = pi.index(s, a, l);
        const double mean = sum[i] / n;
        const double se = std::sqrt(std::max(sum2[i] / n - mean * mean, 1.0 / n) / n);
        if (std::abs(mean - occ(s, a, l)) <= 3.0 * se) ++within;
        ++total;
      }
  out.ge("executor-visit-law-within-3se", static_cast<double>(within) / static_cast<double>(total), 0.9);
}

// ---------------------------------------------------------------------------

void estimation_suite(Collector& out, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 301));
  const auto m = oracle::random_instance(3, 2, 0.1, rng);
  {
    const ConfidenceState empty(3, 2, 4.0);
    double smallest = 1e300;
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t t = 0; t <= 3; ++t) smallest = std::min(smallest, empty.radius(s, a, t));
    out.ge("radius-before-data", smallest, 28.0 * 4.0);
    out.truth("true-transition-member-without-data", covers(empty, m, 0.7));
    std::vector<double> row(7, 0.0);
    row[0] = 0.8;
    row[6] = 0.2;
    out.truth("stay-cap-violation-rejected", !conf_membership(empty, 0.7, 0, 0, row));
    double max_chat = 0.0;
    for (double c : cost_estimator(empty)) max_chat = std::max(max_chat, c);
    out.le("cost-estimate-without-data", max_chat, 0.0);
  }
  {
    // Doubling the same sample keeps P̄ and halves α'.
    EpisodeLog log;
    for (int i = 0; i < 50; ++i) {
      EpisodeStep st;
      st.state = 0;
      st.action = 0;
      st.next = rng.categorical(m.row(0, 0));
      st.cost = 0.3;
      st.observed = true;
      log.steps.push_back(st);
    }
    ConfidenceState conf(3, 2, 2.0);
    double worst = -1e300;
    std::vector<double> prev(4);
    for (std::size_t t = 0; t <= 3; ++t) prev[t] = conf.radius(0, 0, t);
    conf.update(log, Feedback::StochasticCosts, {});
    for (int rep = 0; rep < 5; ++rep) {
      for (std::size_t t = 0; t <= 3; ++t) prev[t] = conf.radius(0, 0, t);
      conf.update(log, Feedback::StochasticCosts, {});
      for (std::size_t t = 0; t <= 3; ++t) worst = std::max(worst, conf.radius(0, 0, t) - prev[t]);
    }
    out.le("radius-shrinks-with-counts", worst, 0.0);
    const auto round = ConfidenceState::from_json(conf.to_json());
    out.truth("counter-json-roundtrip", round.to_json() == conf.to_json());
  }
  {
    // Counting discipline on executor logs.
    EnvSpec spec;
    spec.num_states = 4;
    spec.num_actions = 2;
    spec.seed = derive_seed(seed, 302);
    const auto gen = generate_instance(spec);
    const auto key = key_params(gen.instance, gen.mean_cost);
    SdaParams sda;
    sda.gamma = 0.5;
    sda.num_layers = 2;
    sda.terminal_cost = 3.0;
    SimulatedEnvironment env(gen, Setting::StochasticCosts, derive_seed(seed, 303));
    ConfidenceState conf(4, 2, 3.0);
    const auto pi = uniform_layered_policy(4, 2, 2);
    bool exact = true, monotone = true;
    for (std::size_t k = 1; k <= 300; ++k) {
      env.begin_episode(k);
      const auto log = sigma_execute(env, pi, key.fast_policy, sda, rng, k);
      const auto revealed = env.reveal(pre_switch_pairs(log));
      std::uint64_t before = 0, after = 0;
      std::vector<std::uint64_t> old(8);
      for (std::size_t i = 0; i < 8; ++i) before += old[i] = conf.visits(i / 2, i % 2);
      conf.update(log, Feedback::StochasticCosts, revealed);
      for (std::size_t i = 0; i < 8; ++i) {
        after += conf.visits(i / 2, i % 2);
        monotone = monotone && conf.visits(i / 2, i % 2) >= old[i];
        std::uint64_t split = 0;
        for (std::size_t t = 0; t <= 4; ++t) split += conf.transitions(i / 2, i % 2, t);
        exact = exact && split == conf.visits(i / 2, i % 2);
      }
      exact = exact && after - before == log.pre_switch_steps;
    }
    out.truth("counting-discipline", exact);
    out.truth("counts-monotone", monotone);
  }
  {
    // Cost estimate sandwich on Bernoulli draws.
    const double iota = std::log(2.0 * 2 * 3 * 100 * 100 / 0.1);
    std::size_t hold = 0, range_ok = 0;
    const std::size_t trials = 2000;
    for (std::size_t i = 0; i < trials; ++i) {
      const double mean = 0.1 + 0.9 * rng.uniform();
      const std::size_t n = draw(rng, 1, 500);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += rng.bernoulli(mean) ? 1.0 : 0.0;
      const double chat = optimistic_cost(sum, n, iota);
      const double alpha = iota / static_cast<double>(n);
      if (chat <= mean && mean <= chat + 4.0 * std::sqrt(chat * alpha) + 34.0 * alpha) ++hold;
      if (chat >= 0.0 && chat <= 1.0) ++range_ok;
    }
    out.ge("cost-estimate-sandwich-frequency", static_cast<double>(hold) / trials, 0.9);
    out.ge("cost-estimate-range", static_cast<double>(range_ok) / trials, 1.0);
  }
  {
    const auto cov = coverage_check(20, 50, 0.1, seed);
    out.ge("coverage-fraction", cov.fraction(), 0.85);
  }
  {
    // Members of a covering set stay within ε★ of the true stacked rows.
    double worst = -1e300;
    for (int i = 0; i < 10; ++i) {
      const std::size_t S = draw(rng, 1, 2);
      const auto inst = oracle::random_instance(S, 2, 0.1, rng);
      const double gamma = 0.6 + 0.3 * rng.uniform();
      const auto conf = sampled_confidence(inst, 1.0, 50, 500, rng);
      if (!covers(conf, inst, gamma)) continue;
      const auto polys = PolytopeSet::from_confidence(conf, gamma);
      const auto member = oracle::random_member(polys, 1, rng);
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < 2; ++a) {
          const auto row = member.row(s, a, 0);
          const auto p = inst.row(s, a);
          for (std::size_t t = 0; t < S; ++t) {
            worst = std::max(worst, std::abs(row[t] - gamma * p[t]) - radius_star(conf, s, a, gamma * p[t]));
            worst = std::max(worst, std::abs(row[S + t] - (1 - gamma) * p[t]) -
                                        radius_star(conf, s, a, (1 - gamma) * p[t]));
          }
          worst = std::max(worst, std::abs(row[2 * S] - p[S]) - radius_star(conf, s, a, p[S]));
        }
    }
    out.le("member-within-radius-star", worst, 1e-12);
  }
}

// ---------------------------------------------------------------------------

void polytope_suite(Collector& out, std::uint64_t seed) {
  const auto match = polytope_oracle_check(300, seed);
  out.le("greedy-vs-vertex-enumeration", match.max_error, 1e-9);
  out.le("greedy-points-infeasible", static_cast<double>(match.infeasible), 0.0);

  PolytopeRow point;
  point.lower = {0.2, 0.3, 0.5};
  point.upper = point.lower;
  point.group = {0, 1, -1};
  point.cap[0] = 0.6;
  point.cap[1] = 0.4;
  const std::vector<double> obj{3.0, -1.0, 2.0};
  const auto deg = polytope_linear_opt(point, obj, Direction::Minimize);
  out.le("degenerate-row-returns-point", max_diff(deg.point, point.lower), 0.0);

  PolytopeRow two;
  two.lower = {0.0, 0.0};
  two.upper = {0.7, 1.0};
  two.group = {-1, -1};
  const std::vector<double> obj2{0.0, 1.0};
  const auto greedy = polytope_linear_opt(two, obj2, Direction::Minimize);
  out.le("greedy-fills-cheapest-first", std::abs(greedy.point[0] - 0.7) + std::abs(greedy.point[1] - 0.3), 1e-15);
}

void evi_suite(Collector& out, std::uint64_t seed) {
  const auto match = evi_oracle_check(6, seed);
  out.le("optimistic-q-vs-vertex-oracle-excess", match.max_excess, 0.0);

  Rng rng(derive_seed(seed, 401));
  double singleton = 0.0, zero = 0.0;
  bool within_bound = true;
  for (int i = 0; i < 10; ++i) {
    const std::size_t S = draw(rng, 1, 4), A = draw(rng, 1, 3), H = draw(rng, 1, 5);
    const double gamma = 0.5 + 0.45 * rng.uniform();
    const auto m = oracle::random_instance(S, A, 0.1, rng);
    const auto pi = oracle::random_layered_policy(S, A, H, rng);
    const auto cost = stacked_cost(oracle::random_cost(S, A, 0.0, rng), H, 4.0);
    const double eps = 1e-3;
    const auto res = optimistic_q(PolytopeSet::singleton(m, gamma), pi, cost, eps);
    const auto ref = stacked_policy_evaluation(StackedMdp(m, gamma, H), pi, cost);
    singleton = std::max(singleton, max_diff(res.q.data(), ref.q.data()) - eps);
    within_bound = within_bound && res.sweeps <= 2 * res.sweep_bound;

    const auto conf = sampled_confidence(m, 1.0, 5, 100, rng);
    const auto polys = PolytopeSet::from_confidence(conf, gamma);
    const auto z = optimistic_q(polys, pi, LayeredTable(S, A, H + 1), eps);
    zero = std::max(zero, z.q.max_abs());
  }
  out.le("singleton-matches-evaluation", singleton, 0.0);
  out.le("zero-cost-zero-q", zero, 0.0);
  out.truth("sweeps-within-bound", within_bound);
}

void planning_suite(Collector& out, std::uint64_t seed) {
  const auto bound = dilated_bound_check(30, seed);
  out.ge("dilated-bonus-bound-slack", bound.min_slack, -1e-8);
  out.le("dilated-bonus-terminal-layer", bound.terminal_max, 1e-8);
  out.ge("dilated-bonus-dominates-b", bound.min_dominance, -1e-12);
  const auto match = dilated_oracle_check(5, seed);
  out.le("dilated-bonus-vs-vertex-oracle", match.max_error, 1e-6);

  Rng rng(derive_seed(seed, 501));
  double zero = 0.0, mono = -1e300, limit = 0.0, visit = 0.0, widen = -1e300, optimism = -1e300;
  for (int i = 0; i < 8; ++i) {
    const std::size_t S = draw(rng, 1, 3), A = draw(rng, 1, 2), H = draw(rng, 1, 3);
    const double gamma = 0.5 + 0.4 * rng.uniform();
    const auto m = oracle::random_instance(S, A, 0.1, rng);
    const auto conf = sampled_confidence(m, 1.0, 100, 1000, rng);
    const auto polys = PolytopeSet::from_confidence(conf, gamma);
    const auto pi = oracle::random_layered_policy(S, A, H, rng);
    const double h_prime = 50.0 / (1.0 - gamma);

    zero = std::max(zero, dilated_bonus(polys, pi, LayeredTable(S, A, H + 1), h_prime, 1e-10).bonus.max_abs());
    LayeredTable b(S, A, H + 1), b2(S, A, H + 1);
    for (std::size_t l = 0; l < H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          b(s, a, l) = rng.uniform();
          b2(s, a, l) = b(s, a, l) + 0.5 * rng.uniform();
        }
    const auto lo = dilated_bonus(polys, pi, b, h_prime, 1e-10);
    const auto hi = dilated_bonus(polys, pi, b2, h_prime, 1e-10);
    for (std::size_t k = 0; k < b.data().size(); ++k)
      mono = std::max(mono, lo.bonus.data()[k] - hi.bonus.data()[k]);

    const auto single = PolytopeSet::singleton(m, gamma);
    const auto far = dilated_bonus(single, pi, b, 1e9, 1e-10);
    const auto plain = stacked_policy_evaluation(StackedMdp(m, gamma, H), pi, b);
    limit = std::max(limit, max_diff(far.bonus.data(), plain.q.data()));

    const StackedMdp stacked(m, gamma, H);
    const auto wide = PolytopeSet::widened(conf, gamma, 0.05);
    for (std::size_t l = 0; l < H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          const auto exact = visit_and_return(stacked, pi, 0, s, a, l).visit;
          const auto vb = visit_prob_bounds(single, pi, 0, s, a, l);
          visit = std::max({visit, std::abs(vb.upper - exact), std::abs(vb.lower - exact)});
          const auto narrow = visit_prob_bounds(polys, pi, 0, s, a, l);
          const auto broad = visit_prob_bounds(wide, pi, 0, s, a, l);
          widen = std::max({widen, narrow.upper - broad.upper, broad.lower - narrow.lower});
        }

    if (covers(conf, m, gamma)) {
      const auto cost = stacked_cost(oracle::random_cost(S, A, 0.0, rng), H, 3.0);
      const double eps = 1e-3;
      const auto opt = optimistic_q(polys, pi, cost, eps);
      const auto truth = stacked_policy_evaluation(stacked, pi, cost);
      for (std::size_t k = 0; k < opt.v.data().size(); ++k)
        optimism = std::max(optimism, opt.v.data()[k] - truth.v.data()[k] - eps);
    }
  }
  out.le("zero-bonus-zero-fixed-point", zero, 0.0);
  out.le("dilated-bonus-monotone", mono, 1e-10);
  out.le("undilated-singleton-limit", limit, 1e-6);
  out.le("visit-bounds-singleton-exact", visit, 1e-8);
  out.le("visit-bounds-widen", widen, 1e-10);
  out.le("optimism-under-coverage", optimism, 0.0);

  const auto sandwich = sandwich_check(3, 20000, seed);
  out.le("visit-bounds-sandwich-violations", static_cast<double>(sandwich.violations), 0.0);
}

// ---------------------------------------------------------------------------

void learner_suite(Collector& out, std::uint64_t seed) {
  {
    LayeredTable pi(1, 2, 1, 0.5), loss(1, 2, 1);
    loss(0, 1, 0) = std::log(3.0);
    const auto next = mwu_update(pi, loss, 1.0, false);
    out.le("mwu-two-action-example", std::abs(next(0, 0, 0) - 0.75) + std::abs(next(0, 1, 0) - 0.25), 1e-15);
  }
  Rng rng(derive_seed(seed, 601));
  {
    const auto pi = oracle::random_layered_policy(3, 3, 2, rng);
    LayeredTable loss(3, 3, 3), shifted(3, 3, 3);
    for (std::size_t l = 0; l < 3; ++l)
      for (std::size_t s = 0; s < 3; ++s) {
        const double shift = 10.0 * rng.uniform();
        for (std::size_t a = 0; a < 3; ++a) {
          loss(s, a, l) = rng.uniform();
          shifted(s, a, l) = loss(s, a, l) + shift;
        }
      }
    const auto x = mwu_update(pi, loss, 0.1, false);
    const auto y = mwu_update(pi, shifted, 0.1, false);
    out.le("mwu-shift-invariance", max_diff(x.data(), y.data()), 1e-12);
    out.le("mwu-zero-eta", max_diff(mwu_update(pi, loss, 0.0).data(), pi.data()), 1e-15);
    bool thrown = false;
    try {
      mwu_update(pi, loss, 100.0, true);
    } catch (const ScheduleViolation&) {
      thrown = true;
    }
    out.truth("mwu-schedule-violation", thrown);
  }
  {
    // Hedge regret on synthetic loss sequences.
    double worst = -1e300;
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t A = draw(rng, 2, 3), K = 500;
      const double eta = 0.05 + 0.5 * rng.uniform();
      LayeredTable pi(1, A, 1, 1.0 / static_cast<double>(A));
      std::vector<double> totals(A, 0.0);
      double learner = 0.0, second = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        LayeredTable loss(1, A, 1);
        for (std::size_t a = 0; a < A; ++a) loss(0, a, 0) = rng.uniform() * (a == k % A ? 1.0 : 0.5);
        for (std::size_t a = 0; a < A; ++a) {
          learner += pi(0, a, 0) * loss(0, a, 0);
          second += pi(0, a, 0) * loss(0, a, 0) * loss(0, a, 0);
          totals[a] += loss(0, a, 0);
        }
        pi = mwu_update(pi, loss, eta);
      }
      const double best = *std::min_element(totals.begin(), totals.end());
      worst = std::max(worst, (learner - best) - (std::log(static_cast<double>(A)) / eta + eta * second));
    }
    out.le("exponential-weights-regret-bound", worst, 0.0);
  }
  {
    // Learner internals on a short stochastic-costs run.
    EnvSpec spec;
    spec.num_states = 3;
    spec.num_actions = 2;
    spec.p_goal = 0.1;
    spec.seed = derive_seed(seed, 602);
    const auto gen = generate_instance(spec);
    const auto key = key_params(gen.instance, gen.mean_cost);
    auto config = make_learner_config(Setting::StochasticCosts, 3, 2, 30, 0.1, key, {{"eta", 0.2},
                                                                                      {"check_schedule", 0.0}});
    SimulatedEnvironment env(gen, Setting::StochasticCosts, derive_seed(seed, 603));
    Learner learner(config, 3, 2, gen.instance.init_state());
    Rng run_rng(derive_seed(seed, 604));
    LayeredTable incremental = learner.policy();
    double recon = 0.0, correction_off = 0.0;
    for (std::size_t k = 1; k <= 30; ++k) {
      env.begin_episode(k);
      const auto log = sigma_execute(env, learner.policy(), key.fast_policy, config.sda, run_rng, k);
      const auto revealed = env.reveal(pre_switch_pairs(log));
      auto zero_lambda = config;
      zero_lambda.schedule.lambda = 0.0;
      const auto polys = PolytopeSet::from_confidence(learner.confidence(), config.sda.gamma);
      const auto off = stochastic_episode(zero_lambda, learner.policy(), polys, learner.confidence(), k);
      correction_off = std::max(correction_off, max_diff(off.q_tilde.data(), off.q_hat.data()));
      const auto est = learner.observe(log, revealed);
      LayeredTable loss = est.q_tilde;
      for (std::size_t i = 0; i < loss.data().size(); ++i) loss.data()[i] -= est.bonus.data()[i];
      incremental = mwu_update(incremental, loss, config.schedule.eta, false);
      recon = std::max(recon, max_diff(incremental.data(), learner.policy().data()));
    }
    out.le("policy-reconstruction", recon, 1e-12);
    out.le("zero-correction-weight", correction_off, 1e-12);

    Rng a(7), b(7);
    SimulatedEnvironment e1(gen, Setting::StochasticCosts, 11), e2(gen, Setting::StochasticCosts, 11);
    const auto r1 = run_learner(config, e1, gen.instance.init_state(), 10, a);
    const auto r2 = run_learner(config, e2, gen.instance.init_state(), 10, b);
    bool same = r1.size() == r2.size();
    for (std::size_t i = 0; same && i < r1.size(); ++i)
      same = r1[i].episode_cost == r2[i].episode_cost && r1[i].length == r2[i].length &&
             r1[i].max_qtilde == r2[i].max_qtilde;
    out.truth("seeded-run-determinism", same);
  }
  {
    const auto var = variance_identity_check(100000, seed);
    out.le("variance-identity-relative-error", var.relative_error, 0.05);
    out.le("second-moment-bound-excess", var.second_moment - var.second_moment_bound - 3.0 * var.second_moment_se,
           0.0);
  }
}

using SuiteFn = void (*)(Collector&, std::uint64_t);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites{
      {"ssp-core", ssp_core_suite},       {"sda-lemmas", sda_suite},   {"estimation", estimation_suite},
      {"polytope", polytope_suite},       {"evi-oracle", evi_suite},   {"planning", planning_suite},
      {"learner", learner_suite},
  };
  return suites;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
  SuiteReport report;
  bool found = false;
  for (const auto& [suite, fn] : registry()) {
    if (name != "all" && name != suite) continue;
    found = true;
    Collector out(report, suite);
    try {
      fn(out, seed);
    } catch (const std::exception& e) {
      std::string what = e.what();
      std::replace(what.begin(), what.end(), ',', ';');
      out.truth("uncaught-error: " + what, false);
    }
  }
  if (!found) throw ConfigError("unknown suite '" + name + "'");
  return report;
}

std::string report_csv(const SuiteReport& report) {
  std::ostringstream os;
  os << "suite,check,status,value,threshold\n";
  char buf[64];
  for (const auto& c : report.checks) {
    os << c.suite << ',' << c.name << ',' << (c.pass ? "PASS" : "FAIL") << ',';
    std::snprintf(buf, sizeof buf, "%.10g,%.10g", c.value, c.threshold);
    os << buf << '\n';
  }
  return os.str();
}

}  // namespace ssp::verify
