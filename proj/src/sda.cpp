#include "ssp/sda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ssp/errors.hpp"

namespace ssp {

namespace {

constexpr double kLayerTolerance = 1e-12;
constexpr std::size_t kLayerSweepCap = 10'000'000;

double scaled(double tol, double magnitude) { return tol * std::max(1.0, magnitude); }

// Rows of every non-terminal layer, flattened as [l][s][a][2S+1].
template <class Kernel>
std::vector<double> gather_rows(const Kernel& kernel) {
  const std::size_t S = kernel.num_states(), A = kernel.num_actions(), H = kernel.horizon();
  const std::size_t width = 2 * S + 1;
  std::vector<double> rows(H * S * A * width);
  for (std::size_t l = 0; l < H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a)
        kernel.fill_row(s, a, l, std::span<double>(rows.data() + ((l * S + s) * A + a) * width, width));
  return rows;
}

}  // namespace

std::size_t layers_for(double terminal_cost, std::size_t episodes) {
  const auto target = static_cast<std::uint64_t>(std::ceil(terminal_cost)) * static_cast<std::uint64_t>(episodes);
  std::size_t h = 0;
  std::uint64_t power = 1;
  while (power < target) {
    power <<= 1;
    ++h;
  }
  return std::max<std::size_t>(h, 1);
}

SdaParams rederive(SdaParams p) {
  const double one_minus_gamma = 1.0 - p.gamma;
  const double H = static_cast<double>(p.num_layers);
  const double K = static_cast<double>(p.episodes);
  p.chi = 2.0 * H * p.t_max + p.terminal_cost;
  p.step_cap = std::ceil(8.0 * H / one_minus_gamma * std::log(2.0 * p.t_max * K / p.delta));
  p.dilation_horizon = 8.0 * (H + 1.0) * std::log(2.0 * K) / one_minus_gamma;
  return p;
}

SdaParams sda_params(std::size_t episodes, double delta, double diameter, double t_max) {
  if (episodes < 1) throw InvalidArgument("K must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(diameter >= 1.0) || !(t_max >= 1.0)) throw InvalidArgument("D and Tmax must be at least 1");
  SdaParams p;
  p.episodes = episodes;
  p.delta = delta;
  p.t_max = t_max;
  p.gamma = 1.0 - 1.0 / (2.0 * t_max);
  p.terminal_cost = std::ceil(4.0 * diameter * std::log(2.0 * static_cast<double>(episodes) / delta));
  p.num_layers = layers_for(p.terminal_cost, episodes);
  return rederive(p);
}

StackedMdp::StackedMdp(const SspInstance& base, double gamma, std::size_t horizon)
    : base_(&base), gamma_(gamma), horizon_(horizon) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (horizon < 1) throw InvalidArgument("H must be at least 1");
}

void StackedMdp::fill_row(std::size_t s, std::size_t a, std::size_t, std::span<double> out) const {
  const std::size_t S = base_->num_states();
  auto row = base_->row(s, a);
  for (std::size_t t = 0; t < S; ++t) {
    out[t] = gamma_ * row[t];
    out[S + t] = (1.0 - gamma_) * row[t];
  }
  out[2 * S] = row[S];
}

LayeredKernel StackedMdp::to_kernel() const {
  LayeredKernel k(num_states(), num_actions(), horizon_);
  for (std::size_t l = 0; l < horizon_; ++l)
    for (std::size_t s = 0; s < num_states(); ++s)
      for (std::size_t a = 0; a < num_actions(); ++a) fill_row(s, a, l, k.row(s, a, l));
  return k;
}

LayeredTable stacked_cost(const CostFunction& cost, std::size_t horizon, double terminal_cost) {
  LayeredTable out(cost.num_states(), cost.num_actions(), horizon + 1);
  for (std::size_t l = 0; l <= horizon; ++l)
    for (std::size_t s = 0; s < cost.num_states(); ++s)
      for (std::size_t a = 0; a < cost.num_actions(); ++a)
        out(s, a, l) = l == horizon ? terminal_cost : cost(s, a);
  return out;
}

template <class Kernel>
StackedValues stacked_policy_evaluation(const Kernel& kernel, const LayeredTable& pi, const LayeredTable& cost) {
  const std::size_t S = kernel.num_states(), A = kernel.num_actions(), H = kernel.horizon();
  const std::size_t width = 2 * S + 1;
  if (pi.num_layers() != H + 1 || cost.num_layers() != H + 1 || pi.num_states() != S || pi.num_actions() != A ||
      !pi.same_shape(cost))
    throw InvalidArgument("layered policy/cost shape mismatch");
  const auto rows = gather_rows(kernel);

  StackedValues out{LayeredTable(S, 1, H + 1), LayeredTable(S, A, H + 1), 0};
  for (std::size_t s = 0; s < S; ++s) {
    double v = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      out.q(s, a, H) = cost(s, a, H);
      v += pi(s, a, H) * cost(s, a, H);
    }
    out.v.at(s, H) = v;
  }

  std::vector<double> base(S * A);
  for (std::size_t l = H; l-- > 0;) {
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const double* r = rows.data() + ((l * S + s) * A + a) * width;
        double acc = cost(s, a, l);
        for (std::size_t t = 0; t < S; ++t) acc += r[S + t] * out.v.at(t, l + 1);
        base[s * A + a] = acc;
      }
    std::size_t sweep = 0;
    for (;; ++sweep) {
      if (sweep >= kLayerSweepCap) throw NoConvergence("stacked evaluation did not converge within a layer");
      double change = 0.0, magnitude = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        double v = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          const double p = pi(s, a, l);
          if (p == 0.0) continue;
          const double* r = rows.data() + ((l * S + s) * A + a) * width;
          double acc = base[s * A + a];
          for (std::size_t t = 0; t < S; ++t) acc += r[t] * out.v.at(t, l);
          v += p * acc;
        }
        change = std::max(change, std::abs(v - out.v.at(s, l)));
        magnitude = std::max(magnitude, std::abs(v));
        out.v.at(s, l) = v;
      }
      if (change < scaled(kLayerTolerance, magnitude)) break;
    }
    out.sweeps += sweep + 1;
    for (std::size_t s = 0; s < S; ++s) {
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const double* r = rows.data() + ((l * S + s) * A + a) * width;
        double acc = base[s * A + a];
        for (std::size_t t = 0; t < S; ++t) acc += r[t] * out.v.at(t, l);
        out.q(s, a, l) = acc;
        v += pi(s, a, l) * acc;
      }
      out.v.at(s, l) = v;
    }
  }
  return out;
}

template <class Kernel>
double stacked_residual(const Kernel& kernel, const LayeredTable& pi, const LayeredTable& cost,
                        const StackedValues& values) {
  const std::size_t S = kernel.num_states(), A = kernel.num_actions(), H = kernel.horizon();
  std::vector<double> row(2 * S + 1);
  double worst = 0.0;
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s) {
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        double q = cost(s, a, l);
        if (l < H) {
          kernel.fill_row(s, a, l, row);
          for (std::size_t t = 0; t < S; ++t) q += row[t] * values.v.at(t, l) + row[S + t] * values.v.at(t, l + 1);
        }
        worst = std::max(worst, std::abs(q - values.q(s, a, l)));
        v += pi(s, a, l) * values.q(s, a, l);
      }
      worst = std::max(worst, std::abs(v - values.v.at(s, l)));
    }
  return worst;
}

template <class Kernel>
LayeredTable stacked_occupancy(const Kernel& kernel, const LayeredTable& pi, std::size_t start) {
  const std::size_t S = kernel.num_states(), A = kernel.num_actions(), H = kernel.horizon();
  const std::size_t width = 2 * S + 1;
  if (start >= S) throw InvalidArgument("start state out of range");
  const auto rows = gather_rows(kernel);

  // Per-layer state-to-state flows under the policy.
  std::vector<double> stay(S * S), advance(S * S);
  LayeredTable visits(S, 1, H + 1);
  std::vector<double> inflow(S, 0.0);
  inflow[start] = 1.0;
  for (std::size_t l = 0; l <= H; ++l) {
    if (l == H) {
      for (std::size_t t = 0; t < S; ++t) visits.at(t, l) = inflow[t];
      break;
    }
    std::fill(stay.begin(), stay.end(), 0.0);
    std::fill(advance.begin(), advance.end(), 0.0);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const double p = pi(s, a, l);
        if (p == 0.0) continue;
        const double* r = rows.data() + ((l * S + s) * A + a) * width;
        for (std::size_t t = 0; t < S; ++t) {
          stay[s * S + t] += p * r[t];
          advance[s * S + t] += p * r[S + t];
        }
      }
    for (std::size_t sweep = 0;; ++sweep) {
      if (sweep >= kLayerSweepCap) throw NoConvergence("stacked occupancy did not converge within a layer");
      double change = 0.0, magnitude = 0.0;
      for (std::size_t t = 0; t < S; ++t) {
        double acc = inflow[t];
        for (std::size_t s = 0; s < S; ++s) acc += visits.at(s, l) * stay[s * S + t];
        change = std::max(change, std::abs(acc - visits.at(t, l)));
        magnitude = std::max(magnitude, acc);
        visits.at(t, l) = acc;
      }
      if (change < scaled(kLayerTolerance * 1e-1, magnitude)) break;
    }
    for (std::size_t t = 0; t < S; ++t) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) acc += visits.at(s, l) * advance[s * S + t];
      inflow[t] = acc;
    }
  }

  LayeredTable q(S, A, H + 1);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) q(s, a, l) = visits.at(s, l) * pi(s, a, l);
  return q;
}

template <class Kernel>
VisitReturn visit_and_return(const Kernel& kernel, const LayeredTable& pi, std::size_t start, std::size_t ts,
                             std::size_t ta, std::size_t tl) {
  const std::size_t S = kernel.num_states(), A = kernel.num_actions(), H = kernel.horizon();
  if (tl > H || ts >= S || ta >= A || start >= S) throw InvalidArgument("target out of range");
  std::vector<double> row(2 * S + 1);
  LayeredTable w(S, 1, H + 1);

  // w(s, l): probability of eventually taking (ts, ta) at layer tl from (s, l).
  auto sweep_layer = [&](std::size_t l) {
    for (std::size_t sweep = 0;; ++sweep) {
      if (sweep >= kLayerSweepCap) throw NoConvergence("reach recursion did not converge");
      double change = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        double v = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          const double p = pi(s, a, l);
          if (p == 0.0) continue;
          if (l == tl && s == ts && a == ta) {
            v += p;
            continue;
          }
          if (l == H) continue;
          kernel.fill_row(s, a, l, row);
          double acc = 0.0;
          for (std::size_t t = 0; t < S; ++t) {
            acc += row[t] * w.at(t, l);
            if (l < tl) acc += row[S + t] * w.at(t, l + 1);
          }
          v += p * acc;
        }
        change = std::max(change, std::abs(v - w.at(s, l)));
        w.at(s, l) = v;
      }
      if (change < kLayerTolerance * 1e-2) break;
    }
  };
  for (std::size_t l = tl + 1; l-- > 0;) sweep_layer(l);

  VisitReturn out;
  out.visit = w.at(start, 0);
  if (tl < H) {
    kernel.fill_row(ts, ta, tl, row);
    for (std::size_t t = 0; t < S; ++t) out.ret += row[t] * w.at(t, tl);
  }
  return out;
}

template StackedValues stacked_policy_evaluation<StackedMdp>(const StackedMdp&, const LayeredTable&,
                                                             const LayeredTable&);
template StackedValues stacked_policy_evaluation<LayeredKernel>(const LayeredKernel&, const LayeredTable&,
                                                                const LayeredTable&);
template double stacked_residual<StackedMdp>(const StackedMdp&, const LayeredTable&, const LayeredTable&,
                                             const StackedValues&);
template double stacked_residual<LayeredKernel>(const LayeredKernel&, const LayeredTable&, const LayeredTable&,
                                                const StackedValues&);
template LayeredTable stacked_occupancy<StackedMdp>(const StackedMdp&, const LayeredTable&, std::size_t);
template LayeredTable stacked_occupancy<LayeredKernel>(const LayeredKernel&, const LayeredTable&, std::size_t);
template VisitReturn visit_and_return<StackedMdp>(const StackedMdp&, const LayeredTable&, std::size_t,
                                                  std::size_t, std::size_t, std::size_t);
template VisitReturn visit_and_return<LayeredKernel>(const LayeredKernel&, const LayeredTable&, std::size_t,
                                                     std::size_t, std::size_t, std::size_t);

EpisodeLog sigma_execute(EpisodeEnvironment& env, const LayeredTable& pi, const StationaryPolicy& fast,
                         const SdaParams& params, Rng& rng, std::size_t episode, std::size_t max_steps) {
  const std::size_t H = params.num_layers;
  if (pi.num_layers() != H + 1 || pi.num_states() != env.num_states() || pi.num_actions() != env.num_actions())
    throw InvalidArgument("layered policy shape does not match the environment and H");
  const std::size_t goal = env.num_states();

  EpisodeLog log;
  log.episode = episode;
  std::size_t layer = 0;
  while (!env.at_goal()) {
    if (log.steps.size() >= max_steps)
      throw EpisodeOverflow("episode exceeded " + std::to_string(max_steps) + " steps");
    const std::size_t s = env.current_state();
    const std::size_t a = log.switched ? rng.categorical(fast.row(s)) : rng.categorical(pi.row(s, layer));
    const StepOutcome outcome = env.step(a);

    EpisodeStep step{s, a, layer, outcome.incurred, outcome.next, !log.switched, outcome.observed.has_value()};
    log.steps.push_back(step);
    log.incurred_cost += outcome.incurred;
    if (log.switched) continue;

    ++log.pre_switch_steps;
    log.stacked_cost += outcome.incurred;
    if (outcome.next == goal) break;
    if (!rng.bernoulli(params.gamma)) {
      ++layer;
      if (layer == H) {
        log.switched = true;
        log.switch_state = outcome.next;
        log.terminal_cost = terminal_cost_at(params, outcome.next, goal);
        log.stacked_cost += log.terminal_cost;
      }
    }
  }
  return log;
}

}  // namespace ssp
