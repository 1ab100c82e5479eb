#include "ssp/planning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "ssp/errors.hpp"

namespace ssp {

namespace {

constexpr double kReachTolerance = 1e-13;
constexpr std::size_t kReachSweepCap = 10'000'000;

bool in_order(double before, double after, Direction direction) {
  return direction == Direction::Minimize ? before <= after : before >= after;
}

// Greedy allocation for a fixed variable order.
void greedy_fill(const PolytopeRow& row, const std::vector<std::uint32_t>& order, std::vector<double>& point) {
  const std::size_t n = row.size();
  point.assign(row.lower.begin(), row.lower.end());
  double remaining = 1.0;
  double budget[2] = {row.cap[0], row.cap[1]};
  for (std::size_t i = 0; i < n; ++i) {
    remaining -= row.lower[i];
    if (row.group[i] >= 0) budget[row.group[i]] -= row.lower[i];
  }
  for (std::uint32_t i : order) {
    if (remaining <= 0.0) break;
    double room = row.upper[i] - row.lower[i];
    const int g = row.group[i];
    if (g >= 0) room = std::min(room, budget[g]);
    const double add = std::max(0.0, std::min(room, remaining));
    point[i] += add;
    remaining -= add;
    if (g >= 0) budget[g] -= add;
  }
}

void sort_order(std::vector<std::uint32_t>& order, std::size_t n, const double* objective, Direction direction) {
  order.resize(n);
  std::iota(order.begin(), order.end(), 0u);
  if (direction == Direction::Minimize)
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t x, std::uint32_t y) { return objective[x] < objective[y]; });
  else
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t x, std::uint32_t y) { return objective[x] > objective[y]; });
}

// Per-row cache of the greedy solution. The allocation only depends on the
// order of the objective, so it is recomputed only when that order changes.
class CachedRowSolver {
 public:
  double solve(const PolytopeRow& row, const double* objective, Direction direction) {
    const std::size_t n = row.size();
    bool valid = !order_.empty();
    for (std::size_t i = 1; valid && i < n; ++i) valid = in_order(objective[order_[i - 1]], objective[order_[i]], direction);
    if (!valid) {
      sort_order(order_, n, objective, direction);
      greedy_fill(row, order_, point_);
    }
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) value += point_[i] * objective[i];
    return value;
  }
  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<std::uint32_t> order_;
  std::vector<double> point_;
};

void check_shapes(const PolytopeSet& polytopes, const LayeredTable& pi, const LayeredTable& cost) {
  if (pi.num_states() != polytopes.num_states() || pi.num_actions() != polytopes.num_actions() ||
      !pi.same_shape(cost) || pi.num_layers() < 2)
    throw InvalidArgument("policy, cost and confidence set shapes disagree");
}

PolytopeRow interval_row(std::size_t S, double gamma, const std::vector<double>& pbar, const std::vector<double>& eps) {
  PolytopeRow row;
  row.lower.resize(2 * S + 1);
  row.upper.resize(2 * S + 1);
  row.group.resize(2 * S + 1);
  row.cap[0] = gamma;
  row.cap[1] = 1.0 - gamma;
  for (std::size_t t = 0; t < S; ++t) {
    const double lo = std::max(0.0, pbar[t] - eps[t]);
    const double hi = pbar[t] + eps[t];
    row.lower[t] = gamma * lo;
    row.upper[t] = gamma * hi;
    row.group[t] = 0;
    row.lower[S + t] = (1.0 - gamma) * lo;
    row.upper[S + t] = (1.0 - gamma) * hi;
    row.group[S + t] = 1;
  }
  row.lower[2 * S] = std::max(0.0, pbar[S] - eps[S]);
  row.upper[2 * S] = std::min(1.0, pbar[S] + eps[S]);
  row.group[2 * S] = -1;
  return row;
}

PolytopeSet confidence_polytopes(const ConfidenceState& conf, double gamma, double extra) {
  const std::size_t S = conf.num_states(), A = conf.num_actions();
  std::vector<PolytopeRow> rows;
  rows.reserve(S * A);
  std::vector<double> pbar(S + 1), eps(S + 1);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t t = 0; t <= S; ++t) {
        pbar[t] = conf.empirical(s, a, t);
        eps[t] = conf.radius(s, a, t) + extra;
      }
      rows.push_back(interval_row(S, gamma, pbar, eps));
    }
  return PolytopeSet(S, A, gamma, std::move(rows));
}

}  // namespace

void check_feasible(const PolytopeRow& row, double tolerance) {
  const std::size_t n = row.size();
  if (row.upper.size() != n || row.group.size() != n) throw InvalidArgument("polytope row arrays differ in size");
  double lower_total = 0.0, group_lower[2] = {0.0, 0.0}, group_upper[2] = {0.0, 0.0}, free_upper = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (row.lower[i] < 0.0 || row.lower[i] > row.upper[i] + tolerance)
      throw InfeasibleRow("variable " + std::to_string(i) + " has an empty interval");
    lower_total += row.lower[i];
    if (row.group[i] >= 0) {
      group_lower[row.group[i]] += row.lower[i];
      group_upper[row.group[i]] += row.upper[i];
    } else {
      free_upper += row.upper[i];
    }
  }
  if (lower_total > 1.0 + tolerance) throw InfeasibleRow("lower bounds exceed total mass one");
  for (int g = 0; g < 2; ++g)
    if (group_lower[g] > row.cap[g] + tolerance) throw InfeasibleRow("lower bounds exceed a group cap");
  const double reachable = free_upper + std::min(row.cap[0], group_upper[0]) + std::min(row.cap[1], group_upper[1]);
  if (reachable < 1.0 - tolerance) throw InfeasibleRow("upper bounds cannot reach total mass one");
}

LinearOptResult polytope_linear_opt(const PolytopeRow& row, std::span<const double> objective, Direction direction) {
  if (objective.size() != row.size()) throw InvalidArgument("objective size does not match the row");
  check_feasible(row);
  std::vector<std::uint32_t> order;
  sort_order(order, row.size(), objective.data(), direction);
  LinearOptResult out;
  greedy_fill(row, order, out.point);
  for (std::size_t i = 0; i < row.size(); ++i) out.value += out.point[i] * objective[i];
  return out;
}

bool polytope_contains(const PolytopeRow& row, std::span<const double> point, double tolerance) {
  if (point.size() != row.size()) return false;
  double total = 0.0, group[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (point[i] < row.lower[i] - tolerance || point[i] > row.upper[i] + tolerance) return false;
    total += point[i];
    if (row.group[i] >= 0) group[row.group[i]] += point[i];
  }
  return std::abs(total - 1.0) <= tolerance && group[0] <= row.cap[0] + tolerance &&
         group[1] <= row.cap[1] + tolerance;
}

PolytopeSet::PolytopeSet(std::size_t num_states, std::size_t num_actions, double gamma, std::vector<PolytopeRow> rows)
    : num_states_(num_states), num_actions_(num_actions), gamma_(gamma), rows_(std::move(rows)) {
  if (rows_.size() != num_states_ * num_actions_) throw InvalidArgument("one polytope row per pair is required");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  for (const auto& r : rows_) {
    if (r.size() != 2 * num_states_ + 1) throw InvalidArgument("polytope rows need 2S + 1 variables");
    check_feasible(r);
  }
}

PolytopeSet PolytopeSet::from_confidence(const ConfidenceState& conf, double gamma) {
  return confidence_polytopes(conf, gamma, 0.0);
}

PolytopeSet PolytopeSet::widened(const ConfidenceState& conf, double gamma, double extra) {
  return confidence_polytopes(conf, gamma, extra);
}

PolytopeSet PolytopeSet::singleton(const SspInstance& instance, double gamma) {
  const std::size_t S = instance.num_states(), A = instance.num_actions();
  std::vector<PolytopeRow> rows;
  std::vector<double> p(S + 1), zero(S + 1, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      auto r = instance.row(s, a);
      std::copy(r.begin(), r.end(), p.begin());
      auto row = interval_row(S, gamma, p, zero);
      // Pin the goal too so that rounding cannot leave a gap in the total mass.
      row.lower[2 * S] = row.upper[2 * S] = std::max(0.0, 1.0 - std::accumulate(row.lower.begin(), row.lower.end() - 1, 0.0));
      rows.push_back(std::move(row));
    }
  return PolytopeSet(S, A, gamma, std::move(rows));
}

OptimisticResult extended_value_iteration(const PolytopeSet& polytopes, const LayeredTable& pi,
                                          const LayeredTable& cost, double epsilon, Direction direction,
                                          double rho) {
  check_shapes(polytopes, pi, cost);
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  const std::size_t S = pi.num_states(), A = pi.num_actions(), H = pi.num_layers() - 1;
  const std::size_t width = 2 * S + 1;
  const double gamma = polytopes.gamma();
  const double dilation = 1.0 + rho;
  const double contraction = dilation * gamma;
  if (!(contraction < 1.0)) throw DilationTooLarge("(1 + rho) * gamma must stay below one");
  const double spill = dilation * (1.0 - gamma);
  const double growth = spill / (1.0 - contraction);
  double growth_sum = 0.0, power = 1.0;
  for (std::size_t j = 0; j < H; ++j, power *= growth) growth_sum += power;
  const double stop = epsilon * (1.0 - contraction) / growth_sum;

  OptimisticResult out{LayeredTable(S, A, H + 1), LayeredTable(S, 1, H + 1), LayeredKernel(S, A, H), 0, 0};
  double value_bound = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    double v = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      out.q(s, a, H) = cost(s, a, H);
      v += pi(s, a, H) * cost(s, a, H);
      value_bound = std::max(value_bound, std::abs(cost(s, a, H)));
    }
    out.v.at(s, H) = v;
  }

  std::vector<CachedRowSolver> solvers(S * A);
  std::vector<double> objective(width, 0.0);
  for (std::size_t l = H; l-- > 0;) {
    double cost_bound = 0.0;
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) cost_bound = std::max(cost_bound, std::abs(cost(s, a, l)));
    value_bound = (cost_bound + spill * value_bound) / (1.0 - contraction);
    const auto layer_bound = static_cast<std::size_t>(
        2.0 + std::ceil(std::log(std::max(1.0, value_bound / stop)) / (1.0 - contraction)));
    out.sweep_bound += layer_bound;

    for (std::size_t t = 0; t < S; ++t) {
      objective[t] = 0.0;
      objective[S + t] = out.v.at(t, l + 1);
    }
    objective[2 * S] = 0.0;

    std::size_t sweep = 0;
    for (;;) {
      ++sweep;
      if (sweep > 2 * layer_bound)
        throw NoConvergence("extended value iteration exceeded its sweep bound at layer " + std::to_string(l));
      double change = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        double v = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          const double p = pi(s, a, l);
          if (p == 0.0) continue;
          v += p * (cost(s, a, l) + dilation * solvers[s * A + a].solve(polytopes.row(s, a), objective.data(), direction));
        }
        change = std::max(change, std::abs(v - objective[s]));
        objective[s] = v;
      }
      if (change < stop) break;
    }
    out.sweeps += sweep;

    for (std::size_t s = 0; s < S; ++s) {
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        auto& solver = solvers[s * A + a];
        const double q = cost(s, a, l) + dilation * solver.solve(polytopes.row(s, a), objective.data(), direction);
        out.q(s, a, l) = q;
        v += pi(s, a, l) * q;
        auto dest = out.kernel.row(s, a, l);
        std::copy(solver.point().begin(), solver.point().end(), dest.begin());
      }
      out.v.at(s, l) = v;
    }
  }
  return out;
}

OptimisticResult optimistic_q(const PolytopeSet& polytopes, const LayeredTable& pi, const LayeredTable& cost,
                              double epsilon) {
  return extended_value_iteration(polytopes, pi, cost, epsilon, Direction::Minimize, 0.0);
}

DilatedBonusTable dilated_bonus(const PolytopeSet& polytopes, const LayeredTable& pi, const LayeredTable& b,
                                double dilation_horizon, double epsilon) {
  if (!(dilation_horizon > 0.0)) throw InvalidArgument("H' must be positive");
  const double rho = 1.0 / dilation_horizon;
  if (!((1.0 + rho) * polytopes.gamma() < 1.0)) throw DilationTooLarge("(1 + 1/H') * gamma >= 1");
  for (double x : b.data())
    if (x < 0.0) throw InvalidArgument("bonus must be non-negative");
  auto res = extended_value_iteration(polytopes, pi, b, epsilon, Direction::Maximize, rho);
  return DilatedBonusTable{b, std::move(res.q), rho, std::move(res.kernel), res.sweeps};
}

namespace {

// Robust probability of ever taking the target triple, per start state of layer 0.
double robust_reach(const PolytopeSet& polytopes, const LayeredTable& pi, std::size_t start, std::size_t ts,
                    std::size_t ta, std::size_t tl, Direction direction) {
  const std::size_t S = pi.num_states(), A = pi.num_actions(), H = pi.num_layers() - 1;
  const std::size_t width = 2 * S + 1;
  std::vector<double> objective(width, 0.0), next_layer(S, 0.0);
  std::vector<CachedRowSolver> solvers(S * A);

  if (tl == H) {
    for (std::size_t s = 0; s < S; ++s) next_layer[s] = s == ts ? pi(ts, ta, H) : 0.0;
  } else {
    for (std::size_t l = tl + 1; l-- > 0;) {
      for (std::size_t t = 0; t < S; ++t) {
        objective[t] = 0.0;
        objective[S + t] = l == tl ? 0.0 : next_layer[t];
      }
      objective[2 * S] = 0.0;
      for (auto& solver : solvers) solver = CachedRowSolver{};
      for (std::size_t sweep = 0;; ++sweep) {
        if (sweep >= kReachSweepCap) throw NoConvergence("visit-probability iteration did not converge");
        double change = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
          double v = 0.0;
          for (std::size_t a = 0; a < A; ++a) {
            const double p = pi(s, a, l);
            if (p == 0.0) continue;
            if (l == tl && s == ts && a == ta)
              v += p;
            else
              v += p * solvers[s * A + a].solve(polytopes.row(s, a), objective.data(), direction);
          }
          change = std::max(change, std::abs(v - objective[s]));
          objective[s] = v;
        }
        if (change < kReachTolerance) break;
      }
      for (std::size_t s = 0; s < S; ++s) next_layer[s] = objective[s];
    }
    return next_layer[start];
  }
  // Target on the terminal layer: propagate down through every layer.
  for (std::size_t l = H; l-- > 0;) {
    for (std::size_t t = 0; t < S; ++t) {
      objective[t] = 0.0;
      objective[S + t] = next_layer[t];
    }
    for (auto& solver : solvers) solver = CachedRowSolver{};
    for (std::size_t sweep = 0;; ++sweep) {
      if (sweep >= kReachSweepCap) throw NoConvergence("visit-probability iteration did not converge");
      double change = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        double v = 0.0;
        for (std::size_t a = 0; a < A; ++a)
          if (pi(s, a, l) != 0.0)
            v += pi(s, a, l) * solvers[s * A + a].solve(polytopes.row(s, a), objective.data(), direction);
        change = std::max(change, std::abs(v - objective[s]));
        objective[s] = v;
      }
      if (change < kReachTolerance) break;
    }
    for (std::size_t s = 0; s < S; ++s) next_layer[s] = objective[s];
  }
  return next_layer[start];
}

}  // namespace

VisitBounds visit_prob_bounds(const PolytopeSet& polytopes, const LayeredTable& pi, std::size_t start,
                              std::size_t s, std::size_t a, std::size_t l) {
  if (pi.num_states() != polytopes.num_states() || pi.num_actions() != polytopes.num_actions())
    throw InvalidArgument("policy and confidence set shapes disagree");
  if (s >= pi.num_states() || a >= pi.num_actions() || l >= pi.num_layers() || start >= pi.num_states())
    throw InvalidArgument("target out of range");
  VisitBounds out;
  out.upper = std::min(1.0, robust_reach(polytopes, pi, start, s, a, l, Direction::Maximize));
  out.lower = std::max(0.0, robust_reach(polytopes, pi, start, s, a, l, Direction::Minimize));
  out.lower = std::min(out.lower, out.upper);
  return out;
}

std::pair<LayeredTable, LayeredTable> all_visit_prob_bounds(const PolytopeSet& polytopes, const LayeredTable& pi,
                                                            std::size_t start) {
  const std::size_t S = pi.num_states(), A = pi.num_actions(), H = pi.num_layers() - 1;
  LayeredTable upper(S, A, H + 1), lower(S, A, H + 1);
  for (std::size_t l = 0; l < H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        auto b = visit_prob_bounds(polytopes, pi, start, s, a, l);
        upper(s, a, l) = b.upper;
        lower(s, a, l) = b.lower;
      }
  return {std::move(upper), std::move(lower)};
}

}  // namespace ssp
