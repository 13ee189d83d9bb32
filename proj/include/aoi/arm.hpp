#pragma once

// Single user/channel arm: a binary-action AoI chain with saturating age.
//
// Ages are 1-based throughout (1..S). A threshold policy with threshold
// theta transmits iff age >= theta; theta == S + 1 never transmits.

#include <cstddef>
#include <span>
#include <vector>

namespace aoi {

struct ArmSpec {
  std::vector<double> holding_cost;  // h(1..S), stored at [s - 1]
  double tx_cost = 0.0;              // tau
  double success_prob = 1.0;         // rho

  /// Throws ValidationError unless S >= 2, h nondecreasing, 0 < rho <= 1,
  /// tau >= 0.
  void validate() const;

  int state_cap() const { return static_cast<int>(holding_cost.size()); }
  double holding(int age) const { return holding_cost[static_cast<std::size_t>(age - 1)]; }
};

/// Validates and returns the spec, for use in initializer expressions.
ArmSpec make_arm(std::vector<double> holding_cost, double tx_cost, double success_prob);

struct ThresholdPolicy {
  int theta = 1;

  bool transmits(int age) const { return age >= theta; }
};

struct StationaryDist {
  std::vector<double> probs;  // d(1..S), stored at [s - 1]

  double at(int age) const { return probs[static_cast<std::size_t>(age - 1)]; }
};

struct CostSplit {
  double holding = 0.0;     // E_d[h(s)]
  double activation = 0.0;  // E_d[1(s >= theta)]

  /// Average cost of the threshold policy under virtual activation cost lambda.
  double total(double tx_cost, double lambda) const {
    return holding + (tx_cost + lambda) * activation;
  }
};

/// Next age after action `active` with channel outcome `success`.
int arm_transition(int age, bool active, bool success, int cap);

/// h(s) + (tau + lambda) * a.
double arm_stage_cost(const ArmSpec& spec, int age, bool active, double lambda);

/// Stationary distribution of the threshold chain by a direct linear solve
/// of the balance equations. theta == cap + 1 returns the point mass at cap.
StationaryDist stationary_exact(ThresholdPolicy policy, double rho, int cap);

/// Closed-form stationary distribution, 1 <= theta <= cap:
///   d(z) = beta                         for z < theta
///   d(z) = (1 - rho)^(z - theta) beta   for theta <= z < cap
///   d(cap) = (1 - rho)^(cap - theta) beta / rho
/// with beta = 1 / (theta - 1 + 1 / rho).
StationaryDist stationary_closed_form(ThresholdPolicy policy, double rho, int cap);

/// Normalizing constant beta = 1 / (theta - 1 + 1 / rho).
double stationary_beta(int theta, double rho);

/// Holding/activation decomposition of the average cost, from stationary_exact.
CostSplit average_cost(const ArmSpec& spec, ThresholdPolicy policy);

/// Same decomposition for a caller-supplied distribution.
CostSplit cost_split(const ArmSpec& spec, ThresholdPolicy policy, const StationaryDist& dist);

/// Sup-norm distance between two distributions of the same length.
double sup_distance(std::span<const double> a, std::span<const double> b);

}  // namespace aoi
