#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "aoi/errors.hpp"
#include "aoi/exact.hpp"
#include "aoi/index_learn.hpp"
#include "support.hpp"

namespace aoi::learn {
namespace {

const ArmSpec kArm = make_arm({0.5, 1.0, 3.0, 4.5, 8.0, 12.0}, 2.0, 0.7);

// Exact relative Q-factors of threshold theta under lambda, re-anchored at (1, passive).
std::vector<double> exact_relative_q(const ArmSpec& spec, int theta, double lambda) {
  const exact::FiniteMdp mdp = exact::arm_mdp(spec, lambda);
  const auto eval = exact::evaluate_policy(mdp, exact::threshold_table({theta}, spec.state_cap()));
  auto q = exact::relative_q_factors(mdp, eval);
  const double anchor = q[0];
  for (double& x : q) x -= anchor;
  return q;
}

QLearner loaded_learner(const ArmSpec& spec, int theta, double lambda) {
  QLearner l(spec.holding_cost, spec.tx_cost, theta);
  const auto q = exact_relative_q(spec, theta, lambda);
  for (int s = 1; s <= spec.state_cap(); ++s) {
    l.set_q(s, false, q[static_cast<std::size_t>(s - 1) * 2]);
    l.set_q(s, true, q[static_cast<std::size_t>(s - 1) * 2 + 1]);
  }
  l.set_lambda(lambda);
  return l;
}

TEST(QUpdate, ZeroStepLeavesLearnerUnchanged) {
  QLearner l = loaded_learner(kArm, 3, 1.5);
  const QLearner before = l;
  l.q_update(2, true, 1, 0.0);
  l.q_update(4, false, 5, 0.0);
  EXPECT_EQ(l, before);
}

TEST(QUpdate, AnchorStaysExactlyZero) {
  QLearner l(kArm.holding_cost, kArm.tx_cost, 2);
  sim::RandomStream rng(8, aoi::testing::kTestStream, 0);
  for (int k = 0; k < 1000; ++k) {
    const int s = aoi::testing::random_int(rng, 1, 6);
    const bool a = rng.bernoulli(0.5);
    const int next = arm_transition(s, a, rng.bernoulli(0.7), 6);
    l.q_update(s, a, next, 0.3);
    ASSERT_EQ(l.q(1, false), 0.0);
  }
}

TEST(QUpdate, TemporalDifferenceTarget) {
  QLearner l(kArm.holding_cost, kArm.tx_cost, 3);
  l.set_lambda(1.0);
  l.set_q(4, true, 2.0);  // pi(4) = transmit
  l.set_q(3, true, 5.0);
  // Q(3,1) += 0.5 * (h(3) + tau + lambda + Q(4, pi(4)) - Q(3,1)) = 5 + 0.5 * (3 + 2 + 1 + 2 - 5).
  l.q_update(3, true, 4, 0.5);
  EXPECT_DOUBLE_EQ(l.q(3, true), 6.5);
}

TEST(QUpdate, FixedLambdaSweepsReachRelativeQFactors) {
  const ArmSpec spec = make_arm({1, 2, 4, 7, 11}, 3.0, 1.0);
  const int theta = 3;
  const double lambda = 0.75;
  QLearner l(spec.holding_cost, spec.tx_cost, theta);
  l.set_lambda(lambda);
  const StepSchedule schedule = default_schedule();
  for (std::int64_t k = 1; k <= 100'000; ++k) {
    for (int s = 1; s <= 5; ++s) {
      l.q_update(s, false, std::min(s + 1, 5), schedule.eta_q(k));
      l.q_update(s, true, 1, schedule.eta_q(k));
    }
  }
  const auto q = exact_relative_q(spec, theta, lambda);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(l.q_table()[i], q[i], 1e-3) << "entry " << i;
}

TEST(LambdaUpdate, FixedPointAtAnalyticIndex) {
  for (int theta = 1; theta <= 6; ++theta) {
    const double nu = analytic_index(kArm, theta);
    QLearner l = loaded_learner(kArm, theta, nu);
    EXPECT_NEAR(l.drift(), 0.0, 1e-9);
    l.lambda_update(0.5);
    EXPECT_NEAR(l.lambda(), nu, 1e-9);
  }
}

TEST(LambdaUpdate, DriftChangesSignAcrossIndex) {
  for (int theta = 1; theta <= 6; ++theta) {
    const double nu = analytic_index(kArm, theta);
    EXPECT_GT(loaded_learner(kArm, theta, nu - 1.0).drift(), 0.0);
    EXPECT_LT(loaded_learner(kArm, theta, nu + 1.0).drift(), 0.0);
  }
}

TEST(LambdaUpdate, DriftNonincreasingInLambda) {
  sim::RandomStream rng(8, aoi::testing::kTestStream, 1);
  for (int i = 0; i < 20; ++i) {
    const ArmSpec spec = aoi::testing::random_arm(rng, {2, 10, 0.2, 1.0, 0.0, 20.0});
    for (int theta = 1; theta <= spec.state_cap(); ++theta) {
      double prev = std::numeric_limits<double>::infinity();
      for (double lambda : aoi::testing::linspace(-spec.tx_cost - 20, 20, 1.0)) {
        const double d = loaded_learner(spec, theta, lambda).drift();
        EXPECT_LE(d, prev + 1e-9);
        prev = d;
      }
    }
  }
}

TEST(LambdaUpdate, ZeroStepLeavesLambda) {
  QLearner l = loaded_learner(kArm, 2, -3.0);
  l.lambda_update(0.0);
  EXPECT_EQ(l.lambda(), -3.0);
}

TEST(QLearner, BoundedOverLongRuns) {
  QLearner l(kArm.holding_cost, kArm.tx_cost, 4);
  sim::RandomStream rng(8, aoi::testing::kTestStream, 2);
  const StepSchedule schedule = default_schedule();
  for (int k = 0; k < 1'000'000; ++k) l.sweep(rng.bernoulli(0.7), schedule);
  EXPECT_EQ(l.step_count(), 1'000'000);
  for (double x : l.q_table()) {
    EXPECT_TRUE(std::isfinite(x));
    EXPECT_LT(std::abs(x), 1e4);
  }
  EXPECT_NEAR(l.lambda(), analytic_index(kArm, 4), 0.05 * std::max(1.0, std::abs(analytic_index(kArm, 4))));
}

TEST(QLearner, RejectsBadThreshold) {
  EXPECT_THROW(QLearner({1, 2, 3}, 0, 0), ValidationError);
  EXPECT_THROW(QLearner({1, 2, 3}, 0, 4), ValidationError);
}

TEST(StepSchedule, DefaultValues) {
  const StepSchedule s = default_schedule();
  EXPECT_NO_THROW(s.validate());
  EXPECT_DOUBLE_EQ(s.eta_q(1), 1.0);
  EXPECT_DOUBLE_EQ(s.eta_lambda(1), 0.1);
  EXPECT_LT(s.eta_q(10'000) / s.eta_lambda(10'000), s.eta_q(100) / s.eta_lambda(100));
  EXPECT_TRUE(s.eta_q.robbins_monro());
  EXPECT_TRUE(s.eta_lambda.robbins_monro());
}

TEST(StepSchedule, RejectsViolations) {
  EXPECT_THROW((StepSchedule{{1.0, 0.5}, {0.1, 0.6}}.validate()), ValidationError);   // not square-summable
  EXPECT_THROW((StepSchedule{{1.0, 1.2}, {0.1, 0.6}}.validate()), ValidationError);   // summable
  EXPECT_THROW((StepSchedule{{1.0, 0.6}, {0.1, 0.6}}.validate()), ValidationError);   // ratio does not vanish
  EXPECT_THROW((StepSchedule{{0.0, 1.0}, {0.1, 0.6}}.validate()), ValidationError);   // zero scale
  EXPECT_NO_THROW((StepSchedule{{1.0, 1.0}, {0.1, 0.6}}.validate()));
  EXPECT_THROW(PowerStep{}(0), ValidationError);
}

SystemConfig bank_config() {
  SystemConfig c;
  c.holding = {{1, 2, 3}, {0, 5, 6, 9}, {2, 2, 2}};
  c.channels = {{0.5, 1.0}, {0.9, 4.0}};
  return c;
}

TEST(SynchronousSweep, NoActivationsLeaveBankUnchanged) {
  LearnerBank bank(bank_config());
  const LearnerBank before = bank;
  const std::vector<std::optional<bool>> none(2);
  synchronous_sweep(bank, std::span<const std::optional<bool>>(none), default_schedule());
  EXPECT_EQ(bank, before);
}

TEST(SynchronousSweep, OnlyActivatedChannelLearns) {
  LearnerBank bank(bank_config());
  const LearnerBank before = bank;
  const std::vector<ChannelOutcome> act{{1, true}};
  synchronous_sweep(bank, std::span<const ChannelOutcome>(act), default_schedule());
  for (std::size_t n = 0; n < 3; ++n) {
    for (int theta = 1; theta <= bank_config().cap(n); ++theta) {
      EXPECT_EQ(bank.at(0, n, theta), before.at(0, n, theta));
      EXPECT_EQ(bank.at(1, n, theta).step_count(), 1);
      // Some entry moved off zero.
      int touched = 0;
      for (double x : bank.at(1, n, theta).q_table()) touched += x != 0.0;
      EXPECT_GE(touched, 1);
    }
  }
}

TEST(SynchronousSweep, FirstPassFollowsAnchorShift) {
  // With eta = 1 and a zero start, each entry after one pass equals its TD target.
  QLearner l({1, 2, 4}, 0.0, 2);
  const StepSchedule schedule{{1.0, 1.0}, {0.1, 0.6}};
  l.sweep(false, schedule);
  // Age 1 passive is the anchor; the first update (target h(1) + Q(2,1) = 1) is
  // subtracted from everything afterwards.
  EXPECT_EQ(l.q(1, false), 0.0);
  EXPECT_EQ(l.step_count(), 1);
  // Q(1,1) target: h(1) + tau + lambda + Q(2, pi(2) = 1) = 1 + 0 + (-1) = 0.
  EXPECT_DOUBLE_EQ(l.q(1, true), 0.0);
}

TEST(SynchronousSweep, IdenticalStreamsStayIdentical) {
  LearnerBank a(bank_config()), b(bank_config());
  sim::RandomStream rng(8, aoi::testing::kTestStream, 3);
  for (int k = 0; k < 500; ++k) {
    std::vector<std::optional<bool>> out(2);
    if (rng.bernoulli(0.6)) out[0] = rng.bernoulli(0.5);
    if (rng.bernoulli(0.6)) out[1] = rng.bernoulli(0.9);
    synchronous_sweep(a, std::span<const std::optional<bool>>(out), default_schedule());
    synchronous_sweep(b, std::span<const std::optional<bool>>(out), default_schedule());
  }
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.table(), b.table());
}

TEST(SynchronousSweep, RejectsUnknownOrRepeatedChannel) {
  LearnerBank bank(bank_config());
  const std::vector<ChannelOutcome> unknown{{2, true}};
  EXPECT_THROW(synchronous_sweep(bank, std::span<const ChannelOutcome>(unknown), default_schedule()), ValidationError);
  const std::vector<ChannelOutcome> twice{{0, true}, {0, false}};
  EXPECT_THROW(synchronous_sweep(bank, std::span<const ChannelOutcome>(twice), default_schedule()), ValidationError);
  const std::vector<std::optional<bool>> short_list(1);
  EXPECT_THROW(synchronous_sweep(bank, std::span<const std::optional<bool>>(short_list), default_schedule()),
               ValidationError);
}

TEST(LearnerBank, TableAndCsv) {
  LearnerBank bank(bank_config());
  bank.at(1, 1, 3).set_lambda(2.5);
  const IndexTable t = bank.table();
  EXPECT_EQ(t.at(1, 1, 3), 2.5);
  EXPECT_EQ(t.cap(1), 4);
  std::ostringstream out;
  write_learner_csv(out, bank);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "m,n,theta,lambda,step_count");
  int rows = 0;
  bool found = false;
  while (std::getline(in, line)) {
    ++rows;
    found = found || line == "2,2,3,2.5,0";
  }
  EXPECT_EQ(rows, 2 * (3 + 4 + 3));
  EXPECT_TRUE(found);
}

}  // namespace
}  // namespace aoi::learn
