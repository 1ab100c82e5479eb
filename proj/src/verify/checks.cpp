#include "ssp/verify/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssp/env.hpp"
#include "ssp/errors.hpp"
#include "ssp/estimation.hpp"
#include "ssp/learner.hpp"
#include "ssp/planning.hpp"
#include "ssp/sda.hpp"
#include "ssp/verify/oracles.hpp"

namespace ssp::verify {

namespace {

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

LayeredTable random_stacked_cost(std::size_t S, std::size_t A, std::size_t H, double terminal, Rng& rng) {
  LayeredTable c(S, A, H + 1);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) c(s, a, l) = l < H ? rng.uniform() : terminal;
  return c;
}

}  // namespace

ConfidenceState sampled_confidence(const SspInstance& instance, double iota, std::size_t min_n, std::size_t max_n,
                                   Rng& rng) {
  const std::size_t S = instance.num_states(), A = instance.num_actions();
  ConfidenceState conf(S, A, iota);
  EpisodeLog log;
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t n = uniform_int(rng, min_n, max_n);
      for (std::size_t i = 0; i < n; ++i) {
        EpisodeStep st;
        st.state = s;
        st.action = a;
        st.next = rng.categorical(instance.row(s, a));
        st.cost = 0.5;
        st.observed = true;
        log.steps.push_back(st);
      }
    }
  log.pre_switch_steps = log.steps.size();
  conf.update(log, Feedback::StochasticCosts, RevealedCosts{});
  return conf;
}

StackedSimulator::StackedSimulator(const SspInstance& base, double gamma, std::size_t horizon, const LayeredTable& pi,
                                   const LayeredTable& cost)
    : base_(&base),
      gamma_(gamma),
      horizon_(horizon),
      pi_(&pi),
      cost_(&cost),
      stamp_(pi.data().size(), 0) {}

double StackedSimulator::run(Rng& rng, std::size_t start, std::vector<std::size_t>* visited) {
  ++episode_;
  if (visited) visited->clear();
  const std::size_t goal = base_->goal();
  std::size_t s = start, l = 0;
  double total = 0.0;
  for (;;) {
    const std::size_t a = rng.categorical(pi_->row(s, l));
    total += (*cost_)(s, a, l);
    const std::size_t idx = pi_->index(s, a, l);
    if (visited && stamp_[idx] != episode_) {
      stamp_[idx] = episode_;
      visited->push_back(idx);
    }
    if (l == horizon_) break;
    const std::size_t next = rng.categorical(base_->row(s, a));
    if (next == goal) break;
    if (!rng.bernoulli(gamma_)) ++l;
    s = next;
  }
  return total;
}

double optimal_t_max(const SspInstance& instance, const CostFunction& cost) {
  const auto opt = optimal_proper_policy(instance, cost);
  const auto t = hitting_time(instance, opt.policy);
  return *std::max_element(t.begin(), t.end());
}

SdaBoundStats sda_bound_check(std::size_t instances, std::uint64_t seed) {
  SdaBoundStats out;
  Rng rng(derive_seed(seed, 101));
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t S = uniform_int(rng, 1, 5), A = uniform_int(rng, 1, 3);
    const auto m = oracle::random_instance(S, A, uniform_real(rng, 0.05, 0.4), rng);
    const auto c = oracle::random_cost(S, A, uniform_real(rng, 0.0, 0.5), rng);
    const auto opt = optimal_proper_policy(m, c);
    const auto fast = optimal_proper_policy(m, CostFunction::constant(S, A, 1.0));
    const auto t = hitting_time(m, opt.policy);
    const double t_max = *std::max_element(t.begin(), t.end());
    const double diameter = 1.0 + *std::max_element(fast.v.begin(), fast.v.end());
    const auto sda = sda_params(uniform_int(rng, 1, 50), 0.1, diameter, t_max);
    const std::size_t H = sda.num_layers;
    const double cf = sda.terminal_cost;
    const StackedMdp stacked(m, sda);
    const auto kernel = stacked.to_kernel();

    // Value bound for random layered policies and costs in [0, 1].
    for (int rep = 0; rep < 2; ++rep) {
      const auto pi = oracle::random_layered_policy(S, A, H, rng);
      const auto cost = random_stacked_cost(S, A, H, cf, rng);
      const auto vals = stacked_policy_evaluation(stacked, pi, cost);
      const auto dense = oracle::dense_stacked_values(kernel, pi, cost);
      for (std::size_t l = 0; l <= H; ++l)
        for (std::size_t s = 0; s < S; ++s) {
          const double bound = static_cast<double>(H - l) / (1.0 - sda.gamma) + cf;
          out.value_slack = std::min(out.value_slack, bound - vals.v.at(s, l));
          out.oracle_error = std::max(out.oracle_error, std::abs(vals.v.at(s, l) - dense.at(s, l)));
        }
    }

    // Gap of the mirrored optimal policy and the layer decay of its occupancy.
    const auto mirror = mirror_policy(opt.policy, H);
    const auto sc = stacked_cost(c, H, cf);
    const auto vals = stacked_policy_evaluation(stacked, mirror, sc);
    for (std::size_t l = 0; l <= H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          const double gap = cf / std::ldexp(1.0, static_cast<int>(H - l));
          out.gap_slack = std::min(out.gap_slack, opt.q[s * A + a] + gap - vals.q(s, a, l));
        }
    for (std::size_t start = 0; start < S; ++start) {
      const auto occ = oracle::dense_stacked_occupancy(kernel, mirror, start);
      for (std::size_t l = 0; l <= H; ++l) {
        double mass = 0.0;
        for (std::size_t s = 0; s < S; ++s)
          for (std::size_t a = 0; a < A; ++a) mass += occ(s, a, l);
        out.decay_slack = std::min(out.decay_slack, t_max / std::ldexp(1.0, static_cast<int>(l)) - mass);
      }
    }
    ++out.instances;
  }
  return out;
}

OracleMatch evi_oracle_check(std::size_t instances, std::uint64_t seed) {
  OracleMatch out;
  Rng rng(derive_seed(seed, 102));
  const double epsilon = 1.0 / 100.0;  // 1/K with K = 100
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t S = uniform_int(rng, 1, 3), A = uniform_int(rng, 1, 2), H = uniform_int(rng, 1, 3);
    const double gamma = uniform_real(rng, 0.5, 0.9);
    const auto m = oracle::random_instance(S, A, uniform_real(rng, 0.05, 0.3), rng);
    const auto conf = sampled_confidence(m, 1.0, 20, 400, rng);
    const auto polys = PolytopeSet::from_confidence(conf, gamma);
    const auto pi = oracle::random_layered_policy(S, A, H, rng);
    const auto cost = random_stacked_cost(S, A, H, uniform_real(rng, 1.0, 5.0), rng);
    const auto lib = optimistic_q(polys, pi, cost, epsilon);
    const auto ref = oracle::robust_vertex_evaluation(polys, pi, cost, Direction::Minimize);
    for (std::size_t k = 0; k < lib.q.data().size(); ++k) {
      const double err = std::abs(lib.q.data()[k] - ref.q.data()[k]);
      out.max_error = std::max(out.max_error, err);
      out.max_excess = std::max(out.max_excess, err - (1e-6 + epsilon));
    }
    ++out.cases;
  }
  return out;
}

OracleMatch polytope_oracle_check(std::size_t rows, std::uint64_t seed) {
  OracleMatch out;
  Rng rng(derive_seed(seed, 103));
  while (out.cases < rows) {
    const std::size_t n = uniform_int(rng, 1, 4);
    PolytopeRow row;
    std::vector<double> x(n);
    double total = 0.0;
    for (double& v : x) total += v = -std::log(1.0 - rng.uniform());
    for (double& v : x) v /= total;
    double sums[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const int g = static_cast<int>(uniform_int(rng, 0, 2)) - 1;
      row.group.push_back(g);
      // Some degenerate intervals and some interior points.
      const double lo = rng.bernoulli(0.2) ? x[i] : std::max(0.0, x[i] - uniform_real(rng, 0.0, 0.5));
      const double hi = rng.bernoulli(0.2) ? x[i] : std::min(1.0, x[i] + uniform_real(rng, 0.0, 0.5));
      row.lower.push_back(lo);
      row.upper.push_back(hi);
      if (g >= 0) sums[g] += x[i];
    }
    for (int g = 0; g < 2; ++g) row.cap[g] = std::min(1.0, sums[g] + (rng.bernoulli(0.3) ? 0.0 : rng.uniform() * 0.3));
    std::vector<double> objective(n);
    for (double& v : objective) v = rng.bernoulli(0.2) ? 0.5 : uniform_real(rng, -1.0, 1.0);
    for (Direction dir : {Direction::Minimize, Direction::Maximize}) {
      const auto lib = polytope_linear_opt(row, objective, dir);
      const double ref = oracle::enumerated_linear_opt(row, objective, dir);
      double recomputed = 0.0;
      for (std::size_t i = 0; i < n; ++i) recomputed += lib.point[i] * objective[i];
      const double err = std::max(std::abs(lib.value - ref), std::abs(recomputed - ref));
      out.max_error = std::max(out.max_error, err);
      out.max_excess = std::max(out.max_excess, err - 1e-9);
      if (!polytope_contains(row, lib.point, 1e-12)) ++out.infeasible;
    }
    ++out.cases;
  }
  return out;
}

OracleMatch dilated_oracle_check(std::size_t instances, std::uint64_t seed) {
  OracleMatch out;
  Rng rng(derive_seed(seed, 104));
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t S = uniform_int(rng, 1, 2), A = uniform_int(rng, 1, 2), H = uniform_int(rng, 1, 3);
    const double gamma = uniform_real(rng, 0.5, 0.9);
    const auto m = oracle::random_instance(S, A, uniform_real(rng, 0.05, 0.3), rng);
    const auto conf = sampled_confidence(m, 1.0, 20, 400, rng);
    const auto polys = PolytopeSet::from_confidence(conf, gamma);
    const auto pi = oracle::random_layered_policy(S, A, H, rng);
    auto b = random_stacked_cost(S, A, H, 0.0, rng);
    const double h_prime = uniform_real(rng, 2.0, 20.0) / (1.0 - gamma);
    const double tol = 1e-9;
    const auto lib = dilated_bonus(polys, pi, b, h_prime, tol);
    const auto ref = oracle::robust_vertex_evaluation(polys, pi, b, Direction::Maximize, 1.0 / h_prime);
    for (std::size_t k = 0; k < lib.bonus.data().size(); ++k) {
      const double err = std::abs(lib.bonus.data()[k] - ref.q.data()[k]);
      out.max_error = std::max(out.max_error, err);
      out.max_excess = std::max(out.max_excess, err - 1e-6);
    }
    ++out.cases;
  }
  return out;
}

CoverageStats coverage_check(std::size_t runs, std::size_t episodes, double delta, std::uint64_t seed) {
  CoverageStats out;
  for (std::size_t r = 0; r < runs; ++r) {
    EnvSpec spec;
    spec.num_states = 5;
    spec.num_actions = 2;
    spec.p_goal = 0.1;
    spec.seed = derive_seed(seed, 1000 + r);
    const auto gen = generate_instance(spec);
    const auto key = key_params(gen.instance, gen.mean_cost);
    const auto config = make_learner_config(Setting::StochasticCosts, spec.num_states, spec.num_actions, episodes,
                                            delta, key);
    SimulatedEnvironment env(gen, Setting::StochasticCosts, derive_seed(seed, 2000 + r));
    Learner learner(config, spec.num_states, spec.num_actions, gen.instance.init_state());
    Rng rng(derive_seed(seed, 3000 + r));
    bool ok = covers(learner.confidence(), gen.instance, config.sda.gamma);
    for (std::size_t k = 1; k <= episodes && ok; ++k) {
      env.begin_episode(k);
      const auto log = sigma_execute(env, learner.policy(), config.key.fast_policy, config.sda, rng, k);
      const auto revealed = env.reveal(pre_switch_pairs(log));
      learner.observe(log, revealed);
      ok = covers(learner.confidence(), gen.instance, config.sda.gamma);
    }
    ++out.runs;
    if (ok) ++out.covered;
  }
  return out;
}

VarianceStats variance_identity_check(std::size_t episodes, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 105));
  const std::size_t S = 3, A = 2, H = 3;
  const double gamma = 0.75;
  const auto m = oracle::random_instance(S, A, 0.2, rng);
  const auto pi = oracle::random_layered_policy(S, A, H, rng);
  const auto cost = random_stacked_cost(S, A, H, 2.0, rng);
  const StackedMdp stacked(m, gamma, H);
  const auto vals = stacked_policy_evaluation(stacked, pi, cost);
  const auto occ = stacked_occupancy(stacked, pi, 0);

  VarianceStats out;
  std::vector<double> row(2 * S + 1);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const double adv = vals.q(s, a, l) - vals.v.at(s, l);
        double var = 0.0;
        if (l < H) {
          stacked.fill_row(s, a, l, row);
          double mean = 0.0, sq = 0.0;
          for (std::size_t t = 0; t < S; ++t) {
            const double vs = vals.v.at(t, l), va = vals.v.at(t, l + 1);
            mean += row[t] * vs + row[S + t] * va;
            sq += row[t] * vs * vs + row[S + t] * va * va;
          }
          var = sq - mean * mean;
        }
        out.analytic_variance += occ(s, a, l) * (adv * adv + var);
        out.second_moment_bound += 2.0 * occ(s, a, l) * cost(s, a, l) * vals.q(s, a, l);
      }

  StackedSimulator sim(m, gamma, H, pi, cost);
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    const double x = sim.run(rng, 0);
    sum += x;
    sum2 += x * x;
    sum4 += x * x * x * x;
  }
  const double n = static_cast<double>(episodes);
  const double mean = sum / n;
  out.empirical_variance = (sum2 - n * mean * mean) / (n - 1.0);
  out.relative_error = std::abs(out.empirical_variance - out.analytic_variance) / out.analytic_variance;
  out.second_moment = sum2 / n;
  out.second_moment_se = std::sqrt(std::max(0.0, sum4 / n - out.second_moment * out.second_moment) / n);
  return out;
}

DilatedBoundStats dilated_bound_check(std::size_t triples, std::uint64_t seed) {
  DilatedBoundStats out;
  Rng rng(derive_seed(seed, 106));
  for (std::size_t i = 0; i < triples; ++i) {
    const std::size_t S = uniform_int(rng, 1, 4), A = uniform_int(rng, 1, 3), H = uniform_int(rng, 1, 4);
    const double gamma = uniform_real(rng, 0.5, 0.95);
    const std::size_t K = uniform_int(rng, 10, 1000);
    const double h_prime = 8.0 * static_cast<double>(H + 1) * std::log(2.0 * static_cast<double>(K)) / (1.0 - gamma);
    const auto m = oracle::random_instance(S, A, uniform_real(rng, 0.02, 0.3), rng);
    const auto conf = sampled_confidence(m, 1.0, 5, 500, rng);
    const auto polys = PolytopeSet::from_confidence(conf, gamma);
    const auto pi = oracle::random_layered_policy(S, A, H, rng);
    const double rho_b = uniform_real(rng, 0.01, 1.0);
    LayeredTable b(S, A, H + 1);
    for (std::size_t l = 0; l < H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) b(s, a, l) = rho_b * rng.uniform();
    const auto res = dilated_bonus(polys, pi, b, h_prime, 1e-9);
    for (std::size_t l = 0; l <= H; ++l) {
      double worst = 0.0;
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          worst = std::max(worst, res.bonus(s, a, l));
          out.min_dominance = std::min(out.min_dominance, res.bonus(s, a, l) - b(s, a, l));
        }
      if (l == H) {
        out.terminal_max = std::max(out.terminal_max, worst);
        continue;
      }
      const double bound = 15.0 * rho_b * static_cast<double>(H - l) / (1.0 - gamma);
      out.min_slack = std::min(out.min_slack, bound - worst);
      out.max_ratio = std::max(out.max_ratio, worst / bound);
    }
    ++out.triples;
  }
  return out;
}

SandwichStats sandwich_check(std::size_t instances, std::size_t episodes, std::uint64_t seed) {
  SandwichStats out;
  Rng rng(derive_seed(seed, 107));
  std::vector<std::size_t> visited;
  while (out.instances < instances && out.skipped < 10 * instances) {
    const std::size_t S = uniform_int(rng, 1, 3), A = uniform_int(rng, 1, 2), H = uniform_int(rng, 1, 3);
    const double gamma = uniform_real(rng, 0.5, 0.9);
    const auto m = oracle::random_instance(S, A, uniform_real(rng, 0.05, 0.3), rng);
    const auto conf = sampled_confidence(m, 1.0, 200, 2000, rng);
    if (!covers(conf, m, gamma)) {
      ++out.skipped;
      continue;
    }
    const auto polys = PolytopeSet::from_confidence(conf, gamma);
    const auto pi = oracle::random_layered_policy(S, A, H, rng);
    const auto [upper, lower] = all_visit_prob_bounds(polys, pi, 0);
    const LayeredTable zero(S, A, H + 1);
    StackedSimulator sim(m, gamma, H, pi, zero);
    std::vector<double> hits(pi.data().size(), 0.0);
    for (std::size_t e = 0; e < episodes; ++e) {
      sim.run(rng, 0, &visited);
      for (std::size_t idx : visited) hits[idx] += 1.0;
    }
    const double n = static_cast<double>(episodes);
    for (std::size_t l = 0; l < H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          const double freq = hits[pi.index(s, a, l)] / n;
          const double se = std::sqrt(std::max(freq * (1.0 - freq), 1.0 / n) / n);
          const double above = (freq - upper(s, a, l)) / se;
          const double below = (lower(s, a, l) - freq) / se;
          out.worst_z = std::max({out.worst_z, above, below});
          if (above > 3.0 || below > 3.0) ++out.violations;
          ++out.comparisons;
        }
    ++out.instances;
  }
  return out;
}

HittingStats hitting_time_check(std::size_t episodes, std::uint64_t seed) {
  EnvSpec spec;
  spec.num_states = 5;
  spec.num_actions = 2;
  spec.p_goal = 0.05;
  spec.seed = derive_seed(seed, 108);
  const auto gen = generate_instance(spec);
  const auto key = key_params(gen.instance, gen.mean_cost);
  const auto sda = sda_params(1000, 0.1, key.diameter, key.t_max);
  Rng rng(derive_seed(seed, 109));
  const auto pi = oracle::random_layered_policy(spec.num_states, spec.num_actions, sda.num_layers, rng);
  SimulatedEnvironment env(gen, Setting::StochasticCosts, derive_seed(seed, 110));

  HittingStats out;
  const double tau = static_cast<double>(sda.num_layers) / (1.0 - sda.gamma) + 1.0;
  out.threshold = 4.0 * tau * std::log(2.0 / 0.05);
  for (std::size_t k = 1; k <= episodes; ++k) {
    env.begin_episode(k);
    const auto log = sigma_execute(env, pi, key.fast_policy, sda, rng, k);
    env.reveal(pre_switch_pairs(log));
    // Length in the stacked MDP: pre-switch steps plus the terminal jump.
    const double length = static_cast<double>(log.pre_switch_steps + (log.switched ? 1 : 0));
    if (length > out.threshold) ++out.exceed;
    ++out.episodes;
  }
  out.limit = 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / static_cast<double>(episodes));
  return out;
}

ExperimentConfig regret_trend_config(Setting setting) {
  ExperimentConfig c;
  c.env.generator = "random-ssp";
  c.env.num_states = 5;
  c.env.num_actions = 3;
  c.env.p_goal = 0.1;
  c.env.c_min = 0.1;
  c.env.seed = 3;
  c.env.adversary = "oblivious-switching";
  c.env.period = 2;
  c.setting = setting;
  c.episodes = 2000;
  c.delta = 0.1;
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  c.overrides = {{"eta", 0.1}, {"check_schedule", 0.0}};
  c.out_dir = "out/regret-" + to_string(setting);
  c.parallel = 4;
  return c;
}

RegretTrend regret_trend(const ExperimentConfig& config, std::size_t k_early) {
  RegretTrend out;
  const auto report = run_experiment(config, false);
  out.episodes = config.episodes;
  std::vector<double> mean(config.episodes, 0.0);
  for (const auto& run : report.runs) {
    if (!run.error.empty() || run.regret.size() != config.episodes) {
      ++out.failed_runs;
      continue;
    }
    for (std::size_t k = 0; k < config.episodes; ++k) mean[k] += run.regret[k];
    ++out.seeds;
  }
  if (out.seeds == 0) return out;
  for (double& v : mean) v /= static_cast<double>(out.seeds);
  out.per_episode_early = mean[k_early - 1] / static_cast<double>(k_early);
  out.per_episode_final = mean.back() / static_cast<double>(config.episodes);
  out.ratio = out.per_episode_final / out.per_episode_early;
  out.slope = loglog_slope(mean, k_early, config.episodes);
  return out;
}

}  // namespace ssp::verify
