#pragma once

// Planning against the transition confidence set: a greedy linear optimizer
// over each row polytope, extended value iteration, dilated bonuses, and
// bounds on visit probabilities.

#include <cstddef>
#include <span>
#include <vector>

#include "ssp/estimation.hpp"
#include "ssp/layered.hpp"

namespace ssp {

enum class Direction { Minimize, Maximize };

/// Box-constrained variables with optional group caps and total mass one.
/// Group 0 and group 1 have caps `cap[0]` and `cap[1]`; group -1 is uncapped.
struct PolytopeRow {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> group;
  double cap[2] = {1.0, 1.0};

  std::size_t size() const { return lower.size(); }
};

struct LinearOptResult {
  std::vector<double> point;
  double value = 0.0;
};

/// Throws InfeasibleRow when the constraints admit no point.
void check_feasible(const PolytopeRow& row, double tolerance = 1e-12);

/// Greedy fill in objective order from the lower bounds. Ties keep index order.
LinearOptResult polytope_linear_opt(const PolytopeRow& row, std::span<const double> objective, Direction direction);

/// Whether `point` satisfies every constraint of `row` within `tolerance`.
bool polytope_contains(const PolytopeRow& row, std::span<const double> point, double tolerance = 1e-12);

/// Confidence polytopes for every base pair (s, a); identical across layers.
/// Variables are laid out as stay[S], advance[S], goal.
class PolytopeSet {
 public:
  PolytopeSet() = default;
  PolytopeSet(std::size_t num_states, std::size_t num_actions, double gamma, std::vector<PolytopeRow> rows);

  /// Intervals from the empirical transitions and Bernstein radii.
  static PolytopeSet from_confidence(const ConfidenceState& conf, double gamma);
  /// Degenerate set containing only the true stacked transition.
  static PolytopeSet singleton(const SspInstance& instance, double gamma);
  /// Every interval widened by `extra` (before clamping).
  static PolytopeSet widened(const ConfidenceState& conf, double gamma, double extra);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double gamma() const { return gamma_; }
  const PolytopeRow& row(std::size_t s, std::size_t a) const { return rows_[s * num_actions_ + a]; }

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  double gamma_ = 0.5;
  std::vector<PolytopeRow> rows_;
};

struct OptimisticResult {
  LayeredTable q;
  LayeredTable v;          // single action column
  LayeredKernel kernel;    // optimizing member transition at the returned values
  std::size_t sweeps = 0;
  std::size_t sweep_bound = 0;
};

/// Fixed point of V(s,l) = Σ_a π(a|s,l)[c(s,a,l) + (1+ρ) opt_P P V], layer by
/// layer from the terminal layer, with V within `epsilon` of the fixed point.
/// Throws NoConvergence beyond twice the sweep bound.
OptimisticResult extended_value_iteration(const PolytopeSet& polytopes, const LayeredTable& pi,
                                          const LayeredTable& cost, double epsilon, Direction direction,
                                          double rho = 0.0);

/// Optimistic Q̃ under the minimizing member of the confidence set.
OptimisticResult optimistic_q(const PolytopeSet& polytopes, const LayeredTable& pi, const LayeredTable& cost,
                              double epsilon);

struct DilatedBonusTable {
  LayeredTable b;
  LayeredTable bonus;  // B
  double rho = 0.0;
  LayeredKernel kernel;
  std::size_t sweeps = 0;
};

/// Fixed point of the dilated operator with ρ = 1/H'. Throws DilationTooLarge
/// when (1 + ρ) γ >= 1.
DilatedBonusTable dilated_bonus(const PolytopeSet& polytopes, const LayeredTable& pi, const LayeredTable& b,
                                double dilation_horizon, double epsilon);

struct VisitBounds {
  double upper = 0.0;  // x̄
  double lower = 0.0;  // x̲
};

/// Largest and smallest probability over the confidence set that (s, a, l)
/// is ever taken from (start, layer 0).
VisitBounds visit_prob_bounds(const PolytopeSet& polytopes, const LayeredTable& pi, std::size_t start,
                              std::size_t s, std::size_t a, std::size_t l);

/// Bounds for every triple on layers below H, returned as two tables.
std::pair<LayeredTable, LayeredTable> all_visit_prob_bounds(const PolytopeSet& polytopes, const LayeredTable& pi,
                                                            std::size_t start);

}  // namespace ssp
