#pragma once

// Exact average-cost machinery for desk-scale MDPs: Poisson-equation policy
// evaluation, policy iteration, and the single-arm threshold/index oracles.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aoi/arm.hpp"
#include "aoi/composite.hpp"

namespace aoi::exact {

struct Transition {
  std::size_t next;
  double prob;
};

/// Dense-cost, sparse-transition finite MDP with a uniform action count.
class FiniteMdp {
 public:
  FiniteMdp(std::size_t states, std::size_t actions);

  void set(std::size_t s, std::size_t a, double cost, std::vector<Transition> next);

  std::size_t states() const { return states_; }
  std::size_t actions() const { return actions_; }
  double cost(std::size_t s, std::size_t a) const { return cost_[slot(s, a)]; }
  std::span<const Transition> next(std::size_t s, std::size_t a) const { return next_[slot(s, a)]; }

 private:
  std::size_t slot(std::size_t s, std::size_t a) const { return s * actions_ + a; }

  std::size_t states_;
  std::size_t actions_;
  std::vector<double> cost_;
  std::vector<std::vector<Transition>> next_;
};

/// Deterministic stationary policy: action index per state.
using PolicyTable = std::vector<std::size_t>;

struct Evaluation {
  double gain = 0.0;          // J
  std::vector<double> bias;   // V, with V(anchor) = 0
  std::size_t anchor = 0;
};

struct ExactLimits {
  std::size_t max_states = 2000;
  std::uint64_t max_actions = kDefaultActionLimit;
};

/// Single arm under virtual cost lambda. State index s - 1 holds age s;
/// action 0 is passive, action 1 transmits.
FiniteMdp arm_mdp(const ArmSpec& spec, double lambda);

/// Threshold policy as a table over an arm MDP's states.
PolicyTable threshold_table(ThresholdPolicy policy, int cap);

/// The joint MDP together with its action list; state index 0 is the
/// all-ones (fresh) state.
struct CompositeMdp {
  SystemConfig config;
  StateSpace space;
  std::vector<Assignment> actions;
  FiniteMdp mdp;

  std::size_t action_index(const Assignment& a) const;
};

CompositeMdp build_composite(const SystemConfig& config, const ExactLimits& limits = {});

/// Number of closed communicating classes of the chain induced by `policy`.
std::size_t recurrent_class_count(const FiniteMdp& mdp, const PolicyTable& policy);

/// Solves V(s) + J = c(s, pi(s)) + sum_s' P(s'|s, pi(s)) V(s') with V(anchor) = 0.
/// Throws NumericalError on multichain policies or if the residual exceeds 1e-9.
Evaluation evaluate_policy(const FiniteMdp& mdp, const PolicyTable& policy, std::size_t anchor = 0);

/// Max over states of |V(s) + J - c - E[V(s')]|.
double poisson_residual(const FiniteMdp& mdp, const PolicyTable& policy, const Evaluation& eval);

/// Stationary distribution of a unichain policy.
std::vector<double> stationary_distribution(const FiniteMdp& mdp, const PolicyTable& policy);

/// Q(s, a) = c(s, a) - J + E[V(s')], laid out as [s * actions + a].
std::vector<double> relative_q_factors(const FiniteMdp& mdp, const Evaluation& eval);

struct PolicyIterationResult {
  PolicyTable policy;
  Evaluation evaluation;
  int iterations = 0;
};

/// Howard policy iteration from the all-zero-action policy. A state switches
/// only when some action improves it by more than 1e-10; among improving
/// actions the lowest index wins.
PolicyIterationResult policy_iteration(const FiniteMdp& mdp, int max_iterations = 1000);

/// Every theta in 1..S+1 whose J(theta, lambda) is within `tol` of the minimum.
std::vector<int> optimal_threshold(const ArmSpec& spec, double lambda, double tol = 1e-9);

/// The lambda at which thresholds theta and theta + 1 cost the same, from
/// the exact stationary solve. Falls back to bisection when the activation
/// gap is below 1e-12; throws NumericalError when the gap vanishes.
double index_bisection(const ArmSpec& spec, int theta);

/// Pure bracketing bisection on J(theta, lambda) - J(theta + 1, lambda).
double coincident_point_by_bisection(const ArmSpec& spec, int theta, double tol = 1e-12);

/// E_{s ~ d^pi1}[Q^pi2(s, pi1(s)) - Q^pi2(s, pi2(s))].
double performance_difference(const FiniteMdp& mdp, const PolicyTable& pi1, const PolicyTable& pi2);

/// True iff the bias of threshold policy theta under lambda is nondecreasing in age.
bool verify_value_monotonicity(const ArmSpec& spec, int theta, double lambda, double tol = 1e-10);

}  // namespace aoi::exact
