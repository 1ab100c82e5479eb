#include "ssp/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ssp/errors.hpp"

namespace ssp {

EnvSpec env_spec_from_json(const nlohmann::json& doc) {
  EnvSpec s;
  static const char* known[] = {"generator", "num_states", "num_actions", "branching", "width", "height",
                                "slip",      "length",     "instance",    "p_goal",    "c_min", "uniform_cost",
                                "cost_model", "adversary", "period",      "cost_tables", "seed"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
      throw ConfigError("unknown env field '" + it.key() + "'");
  s.generator = doc.value("generator", s.generator);
  s.num_states = doc.value("num_states", s.num_states);
  s.num_actions = doc.value("num_actions", s.num_actions);
  s.branching = doc.value("branching", s.branching);
  s.width = doc.value("width", s.width);
  s.height = doc.value("height", s.height);
  s.slip = doc.value("slip", s.slip);
  s.length = doc.value("length", s.length);
  s.instance_path = doc.value("instance", s.instance_path);
  s.p_goal = doc.value("p_goal", s.p_goal);
  s.c_min = doc.value("c_min", s.c_min);
  s.uniform_cost = doc.value("uniform_cost", s.uniform_cost);
  s.cost_model = doc.value("cost_model", s.cost_model);
  s.adversary = doc.value("adversary", s.adversary);
  s.period = doc.value("period", s.period);
  if (doc.contains("cost_tables")) s.cost_tables = doc.at("cost_tables").get<std::vector<std::vector<double>>>();
  s.seed = doc.value("seed", s.seed);
  return s;
}

nlohmann::json env_spec_to_json(const EnvSpec& s) {
  nlohmann::json doc{{"generator", s.generator},   {"num_states", s.num_states}, {"num_actions", s.num_actions},
                     {"branching", s.branching},   {"width", s.width},           {"height", s.height},
                     {"slip", s.slip},             {"length", s.length},         {"p_goal", s.p_goal},
                     {"c_min", s.c_min},           {"uniform_cost", s.uniform_cost},
                     {"cost_model", s.cost_model}, {"adversary", s.adversary},   {"period", s.period},
                     {"seed", s.seed}};
  if (!s.instance_path.empty()) doc["instance"] = s.instance_path;
  if (!s.cost_tables.empty()) doc["cost_tables"] = s.cost_tables;
  return doc;
}

double sample_cost(const std::string& model, double mean, double c_min, Rng& rng) {
  if (model == "fixed") return mean;
  if (model == "bernoulli") {
    if (c_min >= 1.0) return 1.0;
    const double p_high = (mean - c_min) / (1.0 - c_min);
    return rng.bernoulli(p_high) ? 1.0 : c_min;
  }
  if (model == "uniform") {
    const double w = std::max(0.0, std::min(mean - c_min, 1.0 - mean));
    return mean - w + 2.0 * w * rng.uniform();
  }
  throw ConfigError("unknown cost model '" + model + "'");
}

namespace {

std::vector<double> random_costs(std::size_t count, double c_min, Rng& rng) {
  std::vector<double> out(count);
  for (double& c : out) c = c_min + (1.0 - c_min) * rng.uniform();
  return out;
}

SspInstance make_line(std::size_t n, std::size_t A) {
  std::vector<double> tr(n * A * (n + 1), 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < A; ++a) tr[(s * A + a) * (n + 1) + (a == 0 ? s + 1 : s)] = 1.0;
  return SspInstance(n, A, 0, std::move(tr), "line-" + std::to_string(n));
}

SspInstance make_gridworld(std::size_t w, std::size_t h, double slip) {
  if (w * h < 2) throw ConfigError("gridworld needs at least two cells");
  const std::size_t S = w * h - 1;  // the last cell is the goal
  const std::size_t A = 4;
  const int dx[4] = {1, 0, -1, 0}, dy[4] = {0, 1, 0, -1};
  std::vector<double> tr(S * A * (S + 1), 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const int x = static_cast<int>(s % w), y = static_cast<int>(s / w);
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t d = 0; d < 4; ++d) {
        const double p = (d == a ? 1.0 - slip : 0.0) + slip / 4.0;
        int nx = x + dx[d], ny = y + dy[d];
        if (nx < 0 || ny < 0 || nx >= static_cast<int>(w) || ny >= static_cast<int>(h)) nx = x, ny = y;
        const std::size_t cell = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
        tr[(s * A + a) * (S + 1) + std::min(cell, S)] += p;
      }
  }
  return SspInstance(S, A, 0, std::move(tr), "gridworld-" + std::to_string(w) + "x" + std::to_string(h));
}

SspInstance make_random(std::size_t S, std::size_t A, std::size_t branching, double p_goal, Rng& rng) {
  if (!(p_goal >= 0.0 && p_goal <= 1.0)) throw ConfigError("p_goal must lie in [0, 1]");
  const std::size_t b = branching == 0 ? S : std::min(branching, S);
  std::vector<double> tr(S * A * (S + 1), 0.0);
  std::vector<std::size_t> idx(S);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = 0; i < b; ++i) std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.uniform() * (S - i))]);
      std::vector<double> w(b);
      double total = 0.0;
      for (double& x : w) total += x = -std::log(1.0 - rng.uniform());
      double* row = tr.data() + (s * A + a) * (S + 1);
      for (std::size_t i = 0; i < b; ++i) row[idx[i]] = (1.0 - p_goal) * w[i] / total;
      row[S] = p_goal;
      // Absorb rounding so the row sums to one exactly up to the last ulp.
      const double sum = std::accumulate(row, row + S + 1, 0.0);
      row[S] += 1.0 - sum;
    }
  return SspInstance(S, A, 0, std::move(tr), "random-" + std::to_string(S) + "x" + std::to_string(A));
}

GeneratedEnv attempt(const EnvSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  GeneratedEnv out;
  out.spec = spec;
  if (spec.generator == "line") {
    out.instance = make_line(spec.length, spec.num_actions);
  } else if (spec.generator == "gridworld") {
    out.instance = make_gridworld(spec.width, spec.height, spec.slip);
  } else if (spec.generator == "random-ssp") {
    out.instance = make_random(spec.num_states, spec.num_actions, spec.branching, spec.p_goal, rng);
  } else if (spec.generator == "file") {
    std::ifstream in(spec.instance_path);
    if (!in) throw ConfigError("cannot open instance file '" + spec.instance_path + "'");
    auto [inst, cost] = instance_from_json(nlohmann::json::parse(in));
    out.instance = std::move(inst);
    out.mean_cost = std::move(cost);
  } else {
    throw ConfigError("unknown generator '" + spec.generator + "'");
  }
  const std::size_t S = out.instance.num_states(), A = out.instance.num_actions();
  if (spec.generator != "file") {
    auto means = spec.uniform_cost > 0.0 ? std::vector<double>(S * A, spec.uniform_cost)
                                         : random_costs(S * A, spec.c_min, rng);
    out.mean_cost = CostFunction(S, A, std::move(means), std::min(spec.c_min, spec.uniform_cost > 0.0 ? spec.uniform_cost : 1.0));
  }

  if (!spec.cost_tables.empty()) {
    for (const auto& t : spec.cost_tables) out.adversary_tables.emplace_back(S, A, t, 0.0);
  } else {
    for (std::size_t i = 0; i < std::max<std::size_t>(1, spec.period); ++i)
      out.adversary_tables.emplace_back(S, A, random_costs(S * A, spec.c_min, rng), spec.c_min);
  }
  key_params(out.instance, out.mean_cost);  // throws when the instance is unusable
  return out;
}

}  // namespace

GeneratedEnv generate_instance(const EnvSpec& spec, std::size_t max_attempts) {
  std::string last;
  for (std::size_t i = 0; i < max_attempts; ++i) {
    const std::uint64_t seed = i == 0 ? spec.seed : derive_seed(spec.seed, i);
    try {
      return attempt(spec, seed);
    } catch (const NoProperPolicy& e) {
      last = e.what();
    } catch (const AssumptionViolation& e) {
      last = e.what();
    }
  }
  throw GenerationFailure("no usable instance after " + std::to_string(max_attempts) + " attempts: " + last);
}

SimulatedEnvironment::SimulatedEnvironment(GeneratedEnv env, Setting setting, std::uint64_t seed)
    : env_(std::move(env)),
      setting_(setting),
      seed_(seed),
      transition_rng_(derive_seed(seed, 1)),
      cost_rng_(derive_seed(seed, 2)) {
  if (env_.adversary_tables.empty() && is_adversarial(setting))
    throw ConfigError("adversarial setting without cost tables");
  if (env_.spec.adversary != "oblivious-switching" && env_.spec.adversary != "fixed-sequence")
    throw ConfigError("unknown adversary '" + env_.spec.adversary + "'");
  state_ = env_.instance.init_state();
}

std::vector<double> SimulatedEnvironment::adversary_costs(std::size_t k) const {
  const std::size_t S = num_states(), A = num_actions();
  if (setting_ == Setting::StochAdvFull || setting_ == Setting::StochAdvBandit) {
    // Oblivious i.i.d. draw from the seed and k only.
    Rng rng(derive_seed(derive_seed(seed_, 3), k));
    std::vector<double> out(S * A);
    for (std::size_t i = 0; i < S * A; ++i)
      out[i] = sample_cost(env_.spec.cost_model, env_.mean_cost.values()[i], env_.mean_cost.c_min(), rng);
    return out;
  }
  const auto& tables = env_.adversary_tables;
  const std::size_t n = tables.size();
  const std::size_t idx = env_.spec.adversary == "fixed-sequence" ? std::min(k - 1, n - 1) : (k - 1) % n;
  return tables[idx].values();
}

void SimulatedEnvironment::begin_episode(std::size_t k) {
  if (phase_ == Phase::Active || phase_ == Phase::Finished)
    throw EpisodeOrder("begin_episode called before the previous episode was revealed");
  if (k == 0 || k <= k_) throw EpisodeOrder("episode indices must increase from 1");
  k_ = k;
  state_ = env_.instance.init_state();
  phase_ = Phase::Active;
  if (setting_ != Setting::StochasticCosts) episode_costs_ = adversary_costs(k);
}

StepOutcome SimulatedEnvironment::step(std::size_t action) {
  if (phase_ != Phase::Active) throw EpisodeOrder("step called outside an active episode");
  if (action >= num_actions()) throw InvalidArgument("action out of range");
  const std::size_t s = state_;
  StepOutcome out;
  out.next = transition_rng_.categorical(env_.instance.row(s, action));
  if (setting_ == Setting::StochasticCosts) {
    out.incurred = sample_cost(env_.spec.cost_model, env_.mean_cost(s, action), env_.mean_cost.c_min(), cost_rng_);
    out.observed = out.incurred;
  } else {
    out.incurred = episode_costs_[s * num_actions() + action];
  }
  state_ = out.next;
  if (at_goal()) phase_ = Phase::Finished;
  return out;
}

RevealedCosts SimulatedEnvironment::reveal(const std::vector<std::pair<std::size_t, std::size_t>>& visited) {
  if (phase_ == Phase::Revealed) throw DoubleReveal("episode " + std::to_string(k_) + " was already revealed");
  if (phase_ != Phase::Finished) throw EpisodeOrder("reveal called before the episode finished");
  phase_ = Phase::Revealed;
  RevealedCosts out;
  switch (feedback_of(setting_)) {
    case Feedback::StochasticCosts: break;
    case Feedback::FullInformation: out.full = episode_costs_; break;
    case Feedback::Bandit:
      for (const auto& [s, a] : visited) out.visited[{s, a}] = episode_costs_[s * num_actions() + a];
      break;
  }
  return out;
}

}  // namespace ssp
