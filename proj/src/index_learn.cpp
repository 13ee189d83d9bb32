#include "aoi/index_learn.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "aoi/errors.hpp"

namespace aoi::learn {

double PowerStep::operator()(std::int64_t k) const {
  if (k < 1) throw ValidationError("step schedules are indexed from k = 1");
  return scale / std::pow(static_cast<double>(k), exponent);
}

void StepSchedule::validate() const {
  if (!eta_q.robbins_monro()) throw ValidationError("eta_q must be c/k^p with c > 0 and p in (1/2, 1]");
  if (!eta_lambda.robbins_monro()) throw ValidationError("eta_lambda must be c/k^p with c > 0 and p in (1/2, 1]");
  // eta_q / eta_lambda ~ k^(p_lambda - p_q) must vanish.
  if (!(eta_q.exponent > eta_lambda.exponent)) {
    throw ValidationError("eta_q / eta_lambda must tend to 0 (need exponent of eta_q > exponent of eta_lambda)");
  }
}

StepSchedule default_schedule() { return StepSchedule{}; }

QLearner::QLearner(std::vector<double> holding, double tx_cost, int theta)
    : holding_(std::move(holding)), tx_cost_(tx_cost), theta_(theta), q_(holding_.size() * 2, 0.0) {
  if (holding_.size() < 2) throw ValidationError("learner needs a state cap of at least 2");
  if (theta < 1 || theta > cap()) throw ValidationError("learned thresholds lie in 1..S");
}

void QLearner::q_update(int age, bool active, int next_age, double eta_q) {
  if (age < 1 || age > cap() || next_age < 1 || next_age > cap()) throw ValidationError("age outside 1..S");
  const double cost = holding_[static_cast<std::size_t>(age - 1)] + (active ? tx_cost_ + lambda_ : 0.0);
  const double follow = q(next_age, next_age >= theta_);
  double& entry = q_[slot(age, active)];
  entry += eta_q * (cost + follow - entry);
  // Relative normalization: the anchor is (1, passive). Only an update of the
  // anchor itself can move it away from zero.
  const double offset = q_[slot(1, false)];
  if (offset != 0.0) {
    for (double& x : q_) x -= offset;
  }
}

void QLearner::lambda_update(double eta_lambda) { lambda_ += eta_lambda * drift(); }

void QLearner::sweep(bool success, const StepSchedule& schedule) {
  ++steps_;
  const double eta_q = schedule.eta_q(steps_);
  const int s_cap = cap();
  for (int s = 1; s <= s_cap; ++s) {
    const int up = std::min(s + 1, s_cap);
    q_update(s, false, up, eta_q);
    q_update(s, true, success ? 1 : up, eta_q);
  }
  lambda_update(schedule.eta_lambda(steps_));
}

LearnerBank::LearnerBank(const SystemConfig& config) {
  for (std::size_t n = 0; n < config.users(); ++n) caps_.push_back(config.cap(n));
  learners_.resize(config.channel_count());
  for (std::size_t m = 0; m < config.channel_count(); ++m) {
    learners_[m].resize(config.users());
    for (std::size_t n = 0; n < config.users(); ++n) {
      for (int theta = 1; theta <= caps_[n]; ++theta) {
        learners_[m][n].emplace_back(config.holding[n], config.channels[m].tx_cost, theta);
      }
    }
  }
}

IndexTable LearnerBank::table() const {
  IndexTable t(channels(), caps_);
  for (std::size_t m = 0; m < channels(); ++m) {
    for (std::size_t n = 0; n < users(); ++n) {
      for (int theta = 1; theta <= caps_[n]; ++theta) t.at(m, n, theta) = at(m, n, theta).lambda();
    }
  }
  return t;
}

void synchronous_sweep(LearnerBank& bank, std::span<const std::optional<bool>> outcomes,
                       const StepSchedule& schedule) {
  if (outcomes.size() != bank.channels()) throw ValidationError("need one outcome slot per channel");
  for (std::size_t m = 0; m < outcomes.size(); ++m) {
    if (!outcomes[m]) continue;
    for (std::size_t n = 0; n < bank.users(); ++n) {
      const int cap = bank.at(m, n, 1).cap();
      for (int theta = 1; theta <= cap; ++theta) bank.at(m, n, theta).sweep(*outcomes[m], schedule);
    }
  }
}

void synchronous_sweep(LearnerBank& bank, std::span<const ChannelOutcome> activations,
                       const StepSchedule& schedule) {
  std::vector<std::optional<bool>> outcomes(bank.channels());
  for (const auto& [channel, success] : activations) {
    if (channel >= bank.channels()) throw ValidationError("unknown channel id in learner sweep");
    if (outcomes[channel]) throw ValidationError("channel activated twice in one epoch");
    outcomes[channel] = success;
  }
  synchronous_sweep(bank, std::span<const std::optional<bool>>(outcomes), schedule);
}

void write_learner_csv(std::ostream& out, const LearnerBank& bank) {
  out << "m,n,theta,lambda,step_count\n" << std::setprecision(17);
  for (std::size_t m = 0; m < bank.channels(); ++m) {
    for (std::size_t n = 0; n < bank.users(); ++n) {
      const int cap = bank.at(m, n, 1).cap();
      for (int theta = 1; theta <= cap; ++theta) {
        const auto& l = bank.at(m, n, theta);
        out << m + 1 << ',' << n + 1 << ',' << theta << ',' << l.lambda() << ',' << l.step_count() << '\n';
      }
    }
  }
}

}  // namespace aoi::learn
