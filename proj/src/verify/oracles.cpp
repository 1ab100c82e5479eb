#include "ssp/verify/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssp/errors.hpp"

namespace ssp::oracle {

namespace {

std::vector<double> dirichlet(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) total += x = -std::log(1.0 - rng.uniform());
  for (double& x : w) x /= total;
  return w;
}

bool reaches_goal_everywhere(const SspInstance& m, const std::vector<std::size_t>& actions) {
  const std::size_t S = m.num_states();
  std::vector<bool> ok(S, false);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t s = 0; s < S; ++s) {
      if (ok[s]) continue;
      auto row = m.row(s, actions[s]);
      bool hit = row[S] > 0.0;
      for (std::size_t t = 0; t < S && !hit; ++t) hit = row[t] > 0.0 && ok[t];
      if (hit) ok[s] = changed = true;
    }
  }
  return std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
}

}  // namespace

std::vector<double> dense_policy_values(const SspInstance& instance, const StationaryPolicy& policy,
                                        const CostFunction& cost) {
  const std::size_t S = instance.num_states(), A = instance.num_actions();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(S);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const double p = policy(s, a);
      c(s) += p * cost(s, a);
      auto row = instance.row(s, a);
      for (std::size_t t = 0; t < S; ++t) M(s, t) -= p * row[t];
    }
  Eigen::VectorXd v = M.fullPivLu().solve(c);
  return {v.data(), v.data() + S};
}

std::vector<double> enumerated_optimal_values(const SspInstance& instance, const CostFunction& cost) {
  const std::size_t S = instance.num_states(), A = instance.num_actions();
  std::vector<double> best(S, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> actions(S, 0);
  for (;;) {
    if (reaches_goal_everywhere(instance, actions)) {
      auto v = dense_policy_values(instance, StationaryPolicy::deterministic(A, actions), cost);
      for (std::size_t s = 0; s < S; ++s) best[s] = std::min(best[s], v[s]);
    }
    std::size_t i = 0;
    while (i < S && ++actions[i] == A) actions[i++] = 0;
    if (i == S) break;
  }
  return best;
}

std::vector<double> dense_occupancy(const SspInstance& instance, const StationaryPolicy& policy, std::size_t start) {
  const std::size_t S = instance.num_states(), A = instance.num_actions();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      auto row = instance.row(s, a);
      for (std::size_t t = 0; t < S; ++t) M(t, s) -= policy(s, a) * row[t];
    }
  Eigen::VectorXd e = Eigen::VectorXd::Zero(S);
  e(start) = 1.0;
  Eigen::VectorXd q = M.fullPivLu().solve(e);
  std::vector<double> out(S * A);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) out[s * A + a] = q(s) * policy(s, a);
  return out;
}

namespace {

Eigen::MatrixXd stacked_matrix(const LayeredKernel& kernel, const LayeredTable& pi) {
  const std::size_t S = kernel.num_states(), A = kernel.num_actions(), H = kernel.horizon();
  const std::size_t N = S * (H + 1);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t l = 0; l < H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        auto row = kernel.row(s, a, l);
        for (std::size_t t = 0; t < S; ++t) {
          P(l * S + s, l * S + t) += pi(s, a, l) * row[t];
          P(l * S + s, (l + 1) * S + t) += pi(s, a, l) * row[S + t];
        }
      }
  return P;
}

}  // namespace

LayeredTable dense_stacked_values(const LayeredKernel& kernel, const LayeredTable& pi, const LayeredTable& cost) {
  const std::size_t S = kernel.num_states(), A = kernel.num_actions(), H = kernel.horizon();
  const std::size_t N = S * (H + 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(N, N) - stacked_matrix(kernel, pi);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(N);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) c(l * S + s) += pi(s, a, l) * cost(s, a, l);
  Eigen::VectorXd v = M.fullPivLu().solve(c);
  LayeredTable out(S, 1, H + 1);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s) out.at(s, l) = v(l * S + s);
  return out;
}

LayeredTable dense_stacked_occupancy(const LayeredKernel& kernel, const LayeredTable& pi, std::size_t start) {
  const std::size_t S = kernel.num_states(), A = kernel.num_actions(), H = kernel.horizon();
  const std::size_t N = S * (H + 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(N, N) - stacked_matrix(kernel, pi).transpose();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
  e(start) = 1.0;
  Eigen::VectorXd q = M.fullPivLu().solve(e);
  LayeredTable out(S, A, H + 1);
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) out(s, a, l) = q(l * S + s) * pi(s, a, l);
  return out;
}

std::vector<std::vector<double>> polytope_vertices(const PolytopeRow& row, double tolerance) {
  const std::size_t n = row.size();
  // Inequalities as (coefficients, bound) with a·x <= bound.
  std::vector<std::pair<Eigen::VectorXd, double>> ineq;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd up = Eigen::VectorXd::Zero(n), lo = Eigen::VectorXd::Zero(n);
    up(i) = 1.0;
    lo(i) = -1.0;
    ineq.emplace_back(up, row.upper[i]);
    ineq.emplace_back(lo, -row.lower[i]);
  }
  for (int g = 0; g < 2; ++g) {
    Eigen::VectorXd cap = Eigen::VectorXd::Zero(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (row.group[i] == g) cap(i) = 1.0, any = true;
    if (any) ineq.emplace_back(cap, row.cap[g]);
  }

  std::vector<std::vector<double>> vertices;
  const std::size_t m = ineq.size();
  std::vector<std::size_t> pick(n - 1);
  std::iota(pick.begin(), pick.end(), 0);
  auto feasible = [&](const Eigen::VectorXd& x) {
    if (std::abs(x.sum() - 1.0) > tolerance) return false;
    for (const auto& [a, b] : ineq)
      if (a.dot(x) > b + tolerance) return false;
    return true;
  };
  for (;;) {
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd rhs(n);
    M.row(0) = Eigen::VectorXd::Ones(n).transpose();
    rhs(0) = 1.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      M.row(j + 1) = ineq[pick[j]].first.transpose();
      rhs(j + 1) = ineq[pick[j]].second;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() == static_cast<Eigen::Index>(n)) {
      Eigen::VectorXd x = lu.solve(rhs);
      if (feasible(x)) {
        std::vector<double> v(x.data(), x.data() + n);
        bool dup = false;
        for (const auto& w : vertices) {
          double d = 0.0;
          for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(w[i] - v[i]));
          if (d < 1e-12) {
            dup = true;
            break;
          }
        }
        if (!dup) vertices.push_back(std::move(v));
      }
    }
    if (n == 1) break;
    // Next combination of n - 1 out of m.
    std::size_t i = n - 1;
    while (i-- > 0 && pick[i] == m - (n - 1) + i) {
    }
    if (i == static_cast<std::size_t>(-1)) break;
    ++pick[i];
    for (std::size_t j = i + 1; j < n - 1; ++j) pick[j] = pick[j - 1] + 1;
  }
  if (n == 1 && vertices.empty()) {
    std::vector<double> v{1.0};
    Eigen::VectorXd x(1);
    x(0) = 1.0;
    if (feasible(x)) vertices.push_back(v);
  }
  return vertices;
}

double enumerated_linear_opt(const PolytopeRow& row, const std::vector<double>& objective, Direction direction) {
  const auto vertices = polytope_vertices(row);
  if (vertices.empty()) throw InfeasibleRow("oracle found no vertex");
  double best = direction == Direction::Minimize ? std::numeric_limits<double>::infinity()
                                                 : -std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) {
    double val = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) val += v[i] * objective[i];
    best = direction == Direction::Minimize ? std::min(best, val) : std::max(best, val);
  }
  return best;
}

RobustSolution robust_vertex_evaluation(const PolytopeSet& polytopes, const LayeredTable& pi, const LayeredTable& cost,
                                        Direction direction, double rho) {
  const std::size_t S = pi.num_states(), A = pi.num_actions(), H = pi.num_layers() - 1;
  const std::size_t width = 2 * S + 1;
  std::vector<std::vector<std::vector<double>>> vertices(S * A);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) vertices[s * A + a] = polytope_vertices(polytopes.row(s, a));

  std::vector<std::size_t> choice(H * S * A, 0);
  auto build = [&](double scale) {
    LayeredKernel k(S, A, H);
    for (std::size_t l = 0; l < H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          const auto& v = vertices[s * A + a][choice[(l * S + s) * A + a]];
          auto r = k.row(s, a, l);
          for (std::size_t i = 0; i < width; ++i) r[i] = scale * v[i];
        }
    return k;
  };
  auto row_value = [&](const std::vector<double>& v, const LayeredTable& values, std::size_t l) {
    double acc = 0.0;
    for (std::size_t t = 0; t < S; ++t) acc += v[t] * values.at(t, l) + v[S + t] * values.at(t, l + 1);
    return acc;
  };

  LayeredTable values;
  for (int iter = 0; iter < 10000; ++iter) {
    values = dense_stacked_values(build(1.0 + rho), pi, cost);
    bool changed = false;
    for (std::size_t l = 0; l < H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
          const auto& vs = vertices[s * A + a];
          std::size_t& cur = choice[(l * S + s) * A + a];
          double best = row_value(vs[cur], values, l);
          for (std::size_t j = 0; j < vs.size(); ++j) {
            const double val = row_value(vs[j], values, l);
            const bool better = direction == Direction::Minimize ? val < best - 1e-12 : val > best + 1e-12;
            if (better) best = val, cur = j, changed = true;
          }
        }
    if (!changed) break;
  }

  RobustSolution out{values, LayeredTable(S, A, H + 1), build(1.0)};
  for (std::size_t l = 0; l <= H; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a)
        out.q(s, a, l) = cost(s, a, l) +
                         (l < H ? (1.0 + rho) * row_value(vertices[s * A + a][choice[(l * S + s) * A + a]], values, l)
                                : 0.0);
  return out;
}

LayeredKernel random_member(const PolytopeSet& polytopes, std::size_t horizon, Rng& rng) {
  const std::size_t S = polytopes.num_states(), A = polytopes.num_actions();
  LayeredKernel k(S, A, horizon);
  std::vector<std::vector<std::vector<double>>> vertices(S * A);
  for (std::size_t i = 0; i < S * A; ++i) vertices[i] = polytope_vertices(polytopes.row(i / A, i % A));
  for (std::size_t l = 0; l < horizon; ++l)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const auto& vs = vertices[s * A + a];
        const auto w = dirichlet(3, rng);
        auto r = k.row(s, a, l);
        std::fill(r.begin(), r.end(), 0.0);
        for (std::size_t j = 0; j < 3; ++j) {
          const auto& v = vs[static_cast<std::size_t>(rng.uniform() * static_cast<double>(vs.size()))];
          for (std::size_t i = 0; i < r.size(); ++i) r[i] += w[j] * v[i];
        }
      }
  return k;
}

SspInstance random_instance(std::size_t num_states, std::size_t num_actions, double p_goal, Rng& rng) {
  const std::size_t S = num_states;
  std::vector<double> tr;
  tr.reserve(S * num_actions * (S + 1));
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < num_actions; ++a) {
      auto w = dirichlet(S + 1, rng);
      for (std::size_t t = 0; t < S; ++t) tr.push_back((1.0 - p_goal) * w[t]);
      tr.push_back((1.0 - p_goal) * w[S] + p_goal);
      const double sum = std::accumulate(tr.end() - static_cast<long>(S + 1), tr.end(), 0.0);
      tr.back() += 1.0 - sum;
    }
  return SspInstance(S, num_actions, 0, std::move(tr), "oracle-random");
}

CostFunction random_cost(std::size_t num_states, std::size_t num_actions, double c_min, Rng& rng) {
  std::vector<double> c(num_states * num_actions);
  for (double& x : c) x = c_min + (1.0 - c_min) * rng.uniform();
  return CostFunction(num_states, num_actions, std::move(c), c_min);
}

LayeredTable random_layered_policy(std::size_t num_states, std::size_t num_actions, std::size_t horizon, Rng& rng) {
  LayeredTable pi(num_states, num_actions, horizon + 1);
  for (std::size_t l = 0; l <= horizon; ++l)
    for (std::size_t s = 0; s < num_states; ++s) {
      const auto w = dirichlet(num_actions, rng);
      for (std::size_t a = 0; a < num_actions; ++a) pi(s, a, l) = w[a];
    }
  return pi;
}

}  // namespace ssp::oracle
