#pragma once

// Independent reference computations used by the tests, the `verify`
// command and the acceptance binary. They rely on dense linear solves and
// enumeration rather than on the iterative routines they check.

#include <cstddef>
#include <vector>

#include "ssp/core.hpp"
#include "ssp/layered.hpp"
#include "ssp/planning.hpp"
#include "ssp/rng.hpp"

namespace ssp::oracle {

/// Solves (I − P_π) V = c_π directly.
std::vector<double> dense_policy_values(const SspInstance& instance, const StationaryPolicy& policy,
                                        const CostFunction& cost);

/// Pointwise minimum of V over all deterministic proper policies.
std::vector<double> enumerated_optimal_values(const SspInstance& instance, const CostFunction& cost);

/// State flow q(s) = e_start + Σ q(s') P_π(s|s') solved directly, times π.
std::vector<double> dense_occupancy(const SspInstance& instance, const StationaryPolicy& policy, std::size_t start);

/// Explicit layered kernel on S (H + 1) states, solved as one linear system.
/// Returns V with a single action column.
LayeredTable dense_stacked_values(const LayeredKernel& kernel, const LayeredTable& pi, const LayeredTable& cost);

/// Stacked occupancy from (start, 0) as one linear system.
LayeredTable dense_stacked_occupancy(const LayeredKernel& kernel, const LayeredTable& pi, std::size_t start);

/// Vertices of a polytope row (at most ~8 variables), by basis enumeration.
std::vector<std::vector<double>> polytope_vertices(const PolytopeRow& row, double tolerance = 1e-10);

/// Optimum of a linear objective over a row by enumerating its vertices.
double enumerated_linear_opt(const PolytopeRow& row, const std::vector<double>& objective, Direction direction);

struct RobustSolution {
  LayeredTable v;  // single action column
  LayeredTable q;
  LayeredKernel kernel;
};

/// Exact robust evaluation: policy iteration over vertex members of each row
/// with dense solves, for V = Σ_a π [c + (1 + rho) opt_P P V].
RobustSolution robust_vertex_evaluation(const PolytopeSet& polytopes, const LayeredTable& pi, const LayeredTable& cost,
                                        Direction direction, double rho = 0.0);

/// A random member of every row (convex combination of random greedy vertices).
LayeredKernel random_member(const PolytopeSet& polytopes, std::size_t horizon, Rng& rng);

/// Random row-stochastic instance with a direct goal probability of at least `p_goal`.
SspInstance random_instance(std::size_t num_states, std::size_t num_actions, double p_goal, Rng& rng);
CostFunction random_cost(std::size_t num_states, std::size_t num_actions, double c_min, Rng& rng);
LayeredTable random_layered_policy(std::size_t num_states, std::size_t num_actions, std::size_t horizon, Rng& rng);

}  // namespace ssp::oracle
