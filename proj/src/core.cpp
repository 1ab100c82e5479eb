#include "ssp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssp/errors.hpp"

namespace ssp {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

void check_distribution(std::span<const double> row, const std::string& what) {
  double total = 0.0;
  for (double p : row) {
    require(p >= 0.0 && std::isfinite(p), what + ": negative or non-finite probability");
    total += p;
  }
  require(std::abs(total - 1.0) <= kDistributionTolerance * static_cast<double>(row.size()),
          what + ": row does not sum to one");
}

// Stopping threshold scaled with the magnitude of the iterate so that values
// far above one do not stall on floating-point resolution.
double stop_threshold(const std::vector<double>& v) {
  double scale = 1.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  return kValueIterationTolerance * scale;
}

// States from which the goal is reachable with positive probability when the
// allowed actions at s are those with allowed(s, a) == true.
template <class Allowed>
std::vector<bool> goal_reachable(const SspInstance& m, Allowed allowed) {
  const std::size_t S = m.num_states();
  std::vector<bool> reach(S, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < S; ++s) {
      if (reach[s]) continue;
      for (std::size_t a = 0; a < m.num_actions() && !reach[s]; ++a) {
        if (!allowed(s, a)) continue;
        auto row = m.row(s, a);
        if (row[S] > 0.0) {
          reach[s] = true;
          break;
        }
        for (std::size_t t = 0; t < S; ++t) {
          if (row[t] > 0.0 && reach[t]) {
            reach[s] = true;
            break;
          }
        }
      }
      changed = changed || reach[s];
    }
  }
  return reach;
}

double expected_next(const SspInstance& m, std::size_t s, std::size_t a, const std::vector<double>& v) {
  auto row = m.row(s, a);
  double acc = 0.0;
  for (std::size_t t = 0; t < m.num_states(); ++t) acc += row[t] * v[t];
  return acc;
}

}  // namespace

SspInstance::SspInstance(std::size_t num_states, std::size_t num_actions, std::size_t init_state,
                         std::vector<double> transition, std::string name)
    : num_states_(num_states),
      num_actions_(num_actions),
      init_state_(init_state),
      transition_(std::move(transition)),
      name_(std::move(name)) {
  require(num_states_ > 0 && num_actions_ > 0, "instance needs at least one state and one action");
  require(init_state_ < num_states_, "initial state out of range");
  require(transition_.size() == num_states_ * num_actions_ * (num_states_ + 1),
          "transition table has the wrong size");
  for (std::size_t s = 0; s < num_states_; ++s)
    for (std::size_t a = 0; a < num_actions_; ++a)
      check_distribution(row(s, a), "P[" + std::to_string(s) + "][" + std::to_string(a) + "]");
}

CostFunction::CostFunction(std::size_t num_states, std::size_t num_actions, std::vector<double> values,
                           double c_min)
    : num_states_(num_states), num_actions_(num_actions), values_(std::move(values)), c_min_(c_min) {
  require(values_.size() == num_states_ * num_actions_, "cost table has the wrong size");
  require(c_min_ >= 0.0 && c_min_ <= 1.0, "c_min must lie in [0, 1]");
  for (double c : values_) require(c >= c_min_ && c <= 1.0, "cost outside [c_min, 1]");
}

CostFunction CostFunction::constant(std::size_t num_states, std::size_t num_actions, double value) {
  return CostFunction(num_states, num_actions, std::vector<double>(num_states * num_actions, value),
                      std::min(value, 1.0));
}

StationaryPolicy::StationaryPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs)
    : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
  require(probs_.size() == num_states_ * num_actions_, "policy table has the wrong size");
  for (std::size_t s = 0; s < num_states_; ++s) check_distribution(row(s), "pi[" + std::to_string(s) + "]");
}

StationaryPolicy StationaryPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
  return StationaryPolicy(num_states, num_actions,
                          std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions)));
}

StationaryPolicy StationaryPolicy::deterministic(std::size_t num_actions, const std::vector<std::size_t>& actions) {
  std::vector<double> probs(actions.size() * num_actions, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    require(actions[s] < num_actions, "action out of range");
    probs[s * num_actions + actions[s]] = 1.0;
  }
  return StationaryPolicy(actions.size(), num_actions, std::move(probs));
}

bool StationaryPolicy::is_deterministic() const {
  return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p == 0.0 || p == 1.0; });
}

std::size_t StationaryPolicy::mode(std::size_t s) const {
  auto r = row(s);
  return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

bool is_proper(const SspInstance& instance, const StationaryPolicy& policy) {
  auto reach = goal_reachable(instance, [&](std::size_t s, std::size_t a) { return policy(s, a) > 0.0; });
  return std::all_of(reach.begin(), reach.end(), [](bool b) { return b; });
}

PolicyValues policy_evaluation(const SspInstance& instance, const StationaryPolicy& policy,
                               const CostFunction& cost) {
  const std::size_t S = instance.num_states();
  const std::size_t A = instance.num_actions();
  require(policy.num_states() == S && policy.num_actions() == A, "policy shape mismatch");
  require(cost.num_states() == S && cost.num_actions() == A, "cost shape mismatch");
  if (!is_proper(instance, policy)) throw NonProperPolicy("policy does not reach the goal from every state");

  PolicyValues out;
  out.v.assign(S, 0.0);
  std::vector<double> next(S, 0.0);
  bool converged = false;
  for (std::size_t it = 0; it < kValueIterationCap; ++it) {
    double change = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      double acc = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const double p = policy(s, a);
        if (p == 0.0) continue;
        acc += p * (cost(s, a) + expected_next(instance, s, a, out.v));
      }
      next[s] = acc;
      change = std::max(change, std::abs(acc - out.v[s]));
    }
    out.v.swap(next);
    out.iterations = it + 1;
    if (change > kDivergenceThreshold || out.v[0] > kDivergenceThreshold) break;
    if (change < stop_threshold(out.v)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NonProperPolicy("policy evaluation did not converge");

  out.q.assign(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) out.q[s * A + a] = cost(s, a) + expected_next(instance, s, a, out.v);
  for (std::size_t s = 0; s < S; ++s) {
    double acc = 0.0;
    for (std::size_t a = 0; a < A; ++a) acc += policy(s, a) * out.q[s * A + a];
    out.v[s] = acc;
  }
  return out;
}

double bellman_residual(const SspInstance& instance, const StationaryPolicy& policy, const CostFunction& cost,
                        const PolicyValues& values) {
  const std::size_t S = instance.num_states();
  const std::size_t A = instance.num_actions();
  double worst = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    double v = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const double q = cost(s, a) + expected_next(instance, s, a, values.v);
      worst = std::max(worst, std::abs(q - values.q[s * A + a]));
      v += policy(s, a) * values.q[s * A + a];
    }
    worst = std::max(worst, std::abs(v - values.v[s]));
  }
  return worst;
}

OptimalSolution optimal_proper_policy(const SspInstance& instance, const CostFunction& cost) {
  const std::size_t S = instance.num_states();
  const std::size_t A = instance.num_actions();
  require(cost.num_states() == S && cost.num_actions() == A, "cost shape mismatch");
  {
    auto reach = goal_reachable(instance, [](std::size_t, std::size_t) { return true; });
    if (!std::all_of(reach.begin(), reach.end(), [](bool b) { return b; }))
      throw NoProperPolicy("some state cannot reach the goal under any policy");
  }

  std::vector<double> v(S, 0.0), next(S, 0.0);
  bool converged = false;
  for (std::size_t it = 0; it < kValueIterationCap; ++it) {
    double change = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) best = std::min(best, cost(s, a) + expected_next(instance, s, a, v));
      next[s] = best;
      change = std::max(change, std::abs(best - v[s]));
    }
    v.swap(next);
    if (change > kDivergenceThreshold) break;
    if (change < stop_threshold(v)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NoProperPolicy("optimal value iteration did not converge");

  // Near-optimal action sets; ties resolved toward the smallest index.
  std::vector<double> q(S * A);
  std::vector<double> vmin(S, std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      q[s * A + a] = cost(s, a) + expected_next(instance, s, a, v);
      vmin[s] = std::min(vmin[s], q[s * A + a]);
    }
  auto near_optimal = [&](std::size_t s, std::size_t a) {
    return q[s * A + a] <= vmin[s] + 1e-9 * std::max(1.0, std::abs(vmin[s]));
  };

  std::vector<std::size_t> choice(S, 0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a)
      if (near_optimal(s, a)) {
        choice[s] = a;
        break;
      }
  auto policy = StationaryPolicy::deterministic(A, choice);

  if (!is_proper(instance, policy)) {
    // Zero-cost cycles can make the greedy choice improper. Rebuild it by
    // attaching states to the goal through near-optimal actions only.
    std::vector<bool> resolved(S, false);
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t s = 0; s < S; ++s) {
        if (resolved[s]) continue;
        for (std::size_t a = 0; a < A; ++a) {
          if (!near_optimal(s, a)) continue;
          auto row = instance.row(s, a);
          bool connects = row[S] > 0.0;
          for (std::size_t t = 0; t < S && !connects; ++t) connects = row[t] > 0.0 && resolved[t];
          if (connects) {
            choice[s] = a;
            resolved[s] = true;
            changed = true;
            break;
          }
        }
      }
    }
    if (!std::all_of(resolved.begin(), resolved.end(), [](bool b) { return b; }))
      throw NoProperPolicy("no proper policy attains the optimal value");
    policy = StationaryPolicy::deterministic(A, choice);
  }

  auto values = policy_evaluation(instance, policy, cost);
  return OptimalSolution{std::move(policy), std::move(values.v), std::move(values.q)};
}

std::vector<double> hitting_time(const SspInstance& instance, const StationaryPolicy& policy) {
  auto unit = CostFunction::constant(instance.num_states(), instance.num_actions(), 1.0);
  auto values = policy_evaluation(instance, policy, unit);
  for (double& x : values.v) x += 1.0;
  return values.v;
}

KeyParams key_params(const SspInstance& instance, const CostFunction& cost) {
  KeyParams out;
  auto opt = optimal_proper_policy(instance, cost);
  out.b_star = *std::max_element(opt.v.begin(), opt.v.end());
  if (out.b_star < 1.0)
    throw AssumptionViolation("B* = " + std::to_string(out.b_star) + " is below one");
  auto t = hitting_time(instance, opt.policy);
  out.t_star = t[instance.init_state()];
  out.t_max = *std::max_element(t.begin(), t.end());
  out.optimal_policy = std::move(opt.policy);

  auto unit = CostFunction::constant(instance.num_states(), instance.num_actions(), 1.0);
  auto fast = optimal_proper_policy(instance, unit);
  out.diameter = 1.0 + *std::max_element(fast.v.begin(), fast.v.end());
  out.fast_policy = std::move(fast.policy);
  return out;
}

std::vector<double> occupancy_measure(const SspInstance& instance, const StationaryPolicy& policy) {
  return occupancy_measure(instance, policy, instance.init_state());
}

std::vector<double> occupancy_measure(const SspInstance& instance, const StationaryPolicy& policy,
                                      std::size_t start) {
  const std::size_t S = instance.num_states();
  const std::size_t A = instance.num_actions();
  require(start < S, "start state out of range");
  if (!is_proper(instance, policy)) throw NonProperPolicy("occupancy of a non-proper policy is unbounded");

  // State-to-state kernel under the policy.
  std::vector<double> kernel(S * S, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const double p = policy(s, a);
      if (p == 0.0) continue;
      auto row = instance.row(s, a);
      for (std::size_t t = 0; t < S; ++t) kernel[s * S + t] += p * row[t];
    }

  std::vector<double> q(S, 0.0), next(S, 0.0);
  bool converged = false;
  for (std::size_t it = 0; it < kValueIterationCap; ++it) {
    double change = 0.0;
    for (std::size_t t = 0; t < S; ++t) {
      double acc = t == start ? 1.0 : 0.0;
      for (std::size_t s = 0; s < S; ++s) acc += q[s] * kernel[s * S + t];
      next[t] = acc;
      change = std::max(change, std::abs(acc - q[t]));
    }
    q.swap(next);
    if (change > kDivergenceThreshold) break;
    if (change < stop_threshold(q)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NonProperPolicy("occupancy iteration did not converge");

  std::vector<double> out(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) out[s * A + a] = q[s] * policy(s, a);
  return out;
}

nlohmann::json instance_to_json(const SspInstance& instance, const CostFunction& cost) {
  const std::size_t S = instance.num_states();
  const std::size_t A = instance.num_actions();
  nlohmann::json transition = nlohmann::json::array();
  nlohmann::json costs = nlohmann::json::array();
  for (std::size_t s = 0; s < S; ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    nlohmann::json cost_row = nlohmann::json::array();
    for (std::size_t a = 0; a < A; ++a) {
      auto row = instance.row(s, a);
      per_action.push_back(std::vector<double>(row.begin(), row.end()));
      cost_row.push_back(cost(s, a));
    }
    transition.push_back(std::move(per_action));
    costs.push_back(std::move(cost_row));
  }
  return nlohmann::json{{"name", instance.name()},
                        {"num_states", S},
                        {"num_actions", A},
                        {"init_state", instance.init_state()},
                        {"transition", std::move(transition)},
                        {"cost", std::move(costs)},
                        {"c_min", cost.c_min()}};
}

std::pair<SspInstance, CostFunction> instance_from_json(const nlohmann::json& doc) {
  const auto S = doc.at("num_states").get<std::size_t>();
  const auto A = doc.at("num_actions").get<std::size_t>();
  const auto init = doc.at("init_state").get<std::size_t>();
  const auto& tr = doc.at("transition");
  const auto& cs = doc.at("cost");
  require(tr.size() == S && cs.size() == S, "transition/cost must have one entry per state");
  std::vector<double> transition;
  std::vector<double> costs;
  transition.reserve(S * A * (S + 1));
  for (std::size_t s = 0; s < S; ++s) {
    require(tr[s].size() == A && cs[s].size() == A, "each state needs one entry per action");
    for (std::size_t a = 0; a < A; ++a) {
      auto row = tr[s][a].get<std::vector<double>>();
      require(row.size() == S + 1, "transition rows need S + 1 entries (goal last)");
      transition.insert(transition.end(), row.begin(), row.end());
      costs.push_back(cs[s][a].get<double>());
    }
  }
  SspInstance instance(S, A, init, std::move(transition), doc.value("name", std::string{}));
  CostFunction cost(S, A, std::move(costs), doc.value("c_min", 0.0));
  return {std::move(instance), std::move(cost)};
}

}  // namespace ssp
