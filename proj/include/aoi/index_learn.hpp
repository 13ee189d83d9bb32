#pragma once

// Two-timescale relative Q-learning of one Whittle index per
// (channel, user, threshold) triple, updated synchronously from observed
// channel outcomes.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "aoi/arm.hpp"
#include "aoi/composite.hpp"
#include "aoi/index.hpp"

namespace aoi::learn {

/// eta(k) = scale / k^exponent, k >= 1.
struct PowerStep {
  double scale = 1.0;
  double exponent = 1.0;

  double operator()(std::int64_t k) const;
  /// sum eta = inf and sum eta^2 < inf, i.e. exponent in (1/2, 1].
  bool robbins_monro() const { return scale > 0.0 && exponent > 0.5 && exponent <= 1.0; }
};

struct StepSchedule {
  PowerStep eta_q{1.0, 0.7};
  PowerStep eta_lambda{0.1, 0.6};

  /// Both schedules Robbins-Monro and eta_q / eta_lambda -> 0.
  void validate() const;
};

/// eta_q = 1/k^0.7, eta_lambda = 0.1/k^0.6 (ratio k^-0.1 -> 0).
StepSchedule default_schedule();

class QLearner {
 public:
  /// Learner of the index at `theta` for the arm (h, tau); Q and lambda start at 0.
  /// The anchor is (age 1, passive).
  QLearner(std::vector<double> holding, double tx_cost, int theta);

  int theta() const { return theta_; }
  int cap() const { return static_cast<int>(holding_.size()); }
  double lambda() const { return lambda_; }
  std::int64_t step_count() const { return steps_; }
  double q(int age, bool active) const { return q_[slot(age, active)]; }
  std::span<const double> q_table() const { return q_; }

  void set_lambda(double lambda) { lambda_ = lambda; }
  void set_q(int age, bool active, double value) { q_[slot(age, active)] = value; }

  /// TD step toward the fixed threshold policy's relative Q-factor:
  ///   Q(s,a) += eta_q * (h(s) + (tau + lambda) a + Q(s', pi(s')) - Q(s,a))
  /// followed by subtracting Q(anchor) from every entry.
  void q_update(int age, bool active, int next_age, double eta_q);

  /// lambda += eta_lambda * (Q(theta, 0) - Q(theta, 1)).
  void lambda_update(double eta_lambda);
  double drift() const { return q(theta_, false) - q(theta_, true); }

  /// One synchronous pass over every (s, a) pair for channel outcome `success`,
  /// then one lambda step; step_count advances by one.
  void sweep(bool success, const StepSchedule& schedule);

  bool operator==(const QLearner&) const = default;

 private:
  std::size_t slot(int age, bool active) const {
    return static_cast<std::size_t>(age - 1) * 2 + (active ? 1 : 0);
  }

  std::vector<double> holding_;
  double tx_cost_;
  int theta_;
  double lambda_ = 0.0;
  std::int64_t steps_ = 0;
  std::vector<double> q_;
};

/// All learners of a system: one per (channel, user, theta).
class LearnerBank {
 public:
  explicit LearnerBank(const SystemConfig& config);

  std::size_t channels() const { return learners_.size(); }
  std::size_t users() const { return caps_.size(); }
  QLearner& at(std::size_t m, std::size_t n, int theta) { return learners_[m][n][static_cast<std::size_t>(theta - 1)]; }
  const QLearner& at(std::size_t m, std::size_t n, int theta) const {
    return learners_[m][n][static_cast<std::size_t>(theta - 1)];
  }

  /// Learned lambda per (m, n, theta) as an index table.
  IndexTable table() const;

  bool operator==(const LearnerBank&) const = default;

 private:
  std::vector<int> caps_;
  std::vector<std::vector<std::vector<QLearner>>> learners_;
};

struct ChannelOutcome {
  std::size_t channel;  // 0-based
  bool success;
};

/// outcomes[m] holds gamma_m for channels activated this epoch and nullopt
/// otherwise. Every learner of an activated channel sweeps once.
void synchronous_sweep(LearnerBank& bank, std::span<const std::optional<bool>> outcomes,
                       const StepSchedule& schedule);

/// Same sweep from a list of (channel, outcome) activations; rejects unknown
/// or repeated channel ids.
void synchronous_sweep(LearnerBank& bank, std::span<const ChannelOutcome> activations,
                       const StepSchedule& schedule);

/// CSV with header "m,n,theta,lambda,step_count".
void write_learner_csv(std::ostream& out, const LearnerBank& bank);

}  // namespace aoi::learn
