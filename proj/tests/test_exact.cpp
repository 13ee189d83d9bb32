#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "aoi/cli.hpp"
#include "aoi/errors.hpp"
#include "aoi/exact.hpp"
#include "support.hpp"

namespace aoi::exact {
namespace {

using aoi::testing::linear_arm;

double min_threshold_cost(const ArmSpec& spec, double lambda) {
  double best = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= spec.state_cap() + 1; ++t) best = std::min(best, average_cost(spec, {t}).total(spec.tx_cost, lambda));
  return best;
}

SystemConfig small_system(double tau_lo, double tau_hi, std::uint64_t seed) {
  sim::ScenarioSpec spec;
  spec.users = 3;
  spec.channels = 2;
  spec.states = 4;
  spec.tau_min = tau_lo;
  spec.tau_max = tau_hi;
  return sim::generate_scenario(spec, seed);
}

TEST(EvaluatePolicy, AlwaysTransmitOnPerfectChannel) {
  const ArmSpec spec = linear_arm(5, 0.0, 1.0);
  const Evaluation e = evaluate_policy(arm_mdp(spec, 0.0), threshold_table({1}, 5));
  EXPECT_NEAR(e.gain, 1.0, 1e-12);
}

TEST(EvaluatePolicy, NeverTransmitAbsorbsAtCap) {
  const ArmSpec spec = make_arm({1, 2, 4, 6, 9}, 3.0, 0.6);
  const Evaluation e = evaluate_policy(arm_mdp(spec, 0.0), threshold_table({6}, 5));
  EXPECT_NEAR(e.gain, 9.0, 1e-12);
  EXPECT_EQ(e.bias[0], 0.0);
}

TEST(EvaluatePolicy, ResidualAndAnchorInvariance) {
  const SystemConfig config = small_system(10, 20, 4);
  const CompositeMdp c = build_composite(config);
  const PolicyTable pi = cli::induced_policy(c, parse_scheduler("idx-c-r"));
  const Evaluation base = evaluate_policy(c.mdp, pi);
  EXPECT_LE(poisson_residual(c.mdp, pi, base), 1e-9);
  for (std::size_t anchor : {std::size_t{5}, c.space.size() - 1}) {
    const Evaluation moved = evaluate_policy(c.mdp, pi, anchor);
    EXPECT_NEAR(moved.gain, base.gain, 1e-9);
    EXPECT_EQ(moved.bias[anchor], 0.0);
    // Biases differ by a constant.
    const double shift = moved.bias[0] - base.bias[0];
    for (std::size_t s = 0; s < c.space.size(); ++s) EXPECT_NEAR(moved.bias[s] - base.bias[s], shift, 1e-8);
  }
}

TEST(EvaluatePolicy, RejectsMultichain) {
  // rho = 1: age 1 transmits back to itself and the cap never transmits.
  const ArmSpec spec = linear_arm(4, 0.0, 1.0);
  const PolicyTable pi{1, 0, 0, 0};
  EXPECT_EQ(recurrent_class_count(arm_mdp(spec, 0.0), pi), 2u);
  EXPECT_THROW(evaluate_policy(arm_mdp(spec, 0.0), pi), NumericalError);
}

TEST(EvaluatePolicy, MatchesLongSimulation) {
  const ArmSpec spec = make_arm({0.5, 2, 3, 7, 11, 12}, 4.0, 0.7);
  const int theta = 3;
  const double gain = evaluate_policy(arm_mdp(spec, 1.5), threshold_table({theta}, 6)).gain;
  sim::RandomStream rng(5, testing::kTestStream, 0);
  std::vector<double> costs;
  int age = 1;
  for (int k = 0; k < 1'000'000; ++k) {
    const bool active = age >= theta;
    costs.push_back(arm_stage_cost(spec, age, active, 1.5));
    age = arm_transition(age, active, active && rng.bernoulli(spec.success_prob), 6);
  }
  const auto est = testing::batch_means(costs, 100);
  EXPECT_LE(std::abs(est.mean - gain), 3.0 * est.std_error) << est.mean << " vs " << gain;
}

TEST(EvaluatePolicy, NeverTransmitCompositeIsUnichain) {
  const CompositeMdp c = build_composite(small_system(0, 0, 1));
  const PolicyTable idle(c.space.size(), 0);
  EXPECT_EQ(recurrent_class_count(c.mdp, idle), 1u);
  double cap_cost = 0.0;
  for (const auto& h : c.config.holding) cap_cost += h.back();
  EXPECT_NEAR(evaluate_policy(c.mdp, idle).gain, cap_cost, 1e-9);
}

TEST(StationaryDistribution, MatchesArmChain) {
  const ArmSpec spec = linear_arm(7, 0.0, 0.35);
  for (int theta = 1; theta <= 8; ++theta) {
    const auto d = stationary_distribution(arm_mdp(spec, 0.0), threshold_table({theta}, 7));
    EXPECT_LE(sup_distance(d, stationary_exact({theta}, 0.35, 7).probs), 1e-12);
  }
}

TEST(PolicyIteration, PerfectChannelTransmitsEverywhere) {
  const ArmSpec spec = linear_arm(6, 0.0, 1.0);
  const auto r = policy_iteration(arm_mdp(spec, 0.0));
  EXPECT_NEAR(r.evaluation.gain, 1.0, 1e-12);
  for (std::size_t a : r.policy) EXPECT_EQ(a, 1u);
}

TEST(PolicyIteration, ExpensiveChannelNeverTransmits) {
  const ArmSpec spec = make_arm({1, 2, 3, 4, 5}, 1000.0, 0.5);
  const auto r = policy_iteration(arm_mdp(spec, 0.0));
  EXPECT_NEAR(r.evaluation.gain, 5.0, 1e-9);
  EXPECT_NEAR(r.evaluation.gain, min_threshold_cost(spec, 0.0), 1e-9);
  EXPECT_EQ(r.policy.back(), 0u);
}

TEST(PolicyIteration, ArmOptimumEqualsBestThreshold) {
  sim::RandomStream rng(5, testing::kTestStream, 1);
  for (int i = 0; i < 40; ++i) {
    const ArmSpec spec = testing::random_arm(rng, {2, 10, 0.1, 0.95, 0.0, 20.0});
    const double lambda = rng.uniform(-spec.tx_cost - 10, 10);
    EXPECT_NEAR(policy_iteration(arm_mdp(spec, lambda)).evaluation.gain, min_threshold_cost(spec, lambda), 1e-9);
  }
}

TEST(PolicyIteration, NoHeuristicBeatsOptimum) {
  for (std::uint64_t seed : {1, 2, 3}) {
    for (double tau : {0.0, 15.0}) {
      const CompositeMdp c = build_composite(small_system(tau, tau, seed));
      const auto opt = policy_iteration(c.mdp);
      EXPECT_LE(poisson_residual(c.mdp, opt.policy, opt.evaluation), 1e-9);
      for (const auto& kind : parse_scheduler_list("idx-v,idx-c,idx-v-r,idx-c-r,m-S,m-T")) {
        EXPECT_LE(opt.evaluation.gain, evaluate_policy(c.mdp, cli::induced_policy(c, kind)).gain + 1e-9);
      }
      // Greedy step over the final bias finds no strict improvement.
      const auto q = relative_q_factors(c.mdp, opt.evaluation);
      for (std::size_t s = 0; s < c.space.size(); ++s) {
        for (std::size_t a = 0; a < c.mdp.actions(); ++a) {
          ASSERT_GE(q[s * c.mdp.actions() + a], q[s * c.mdp.actions() + opt.policy[s]] - 1e-9);
        }
      }
    }
  }
}

TEST(BuildComposite, RefusesLargeInstances) {
  sim::ScenarioSpec spec;
  spec.users = 4;
  spec.channels = 2;
  spec.states = 10;
  const SystemConfig config = sim::generate_scenario(spec, 1);
  try {
    build_composite(config);
    FAIL() << "expected a size refusal";
  } catch (const SizeLimitError& e) {
    EXPECT_NE(std::string(e.what()).find("out of memory"), std::string::npos);
  }
  EXPECT_EQ(build_composite(small_system(0, 0, 1)).actions.size(), 13u);
}

TEST(OptimalThreshold, Extremes) {
  const ArmSpec spec = make_arm({1, 3, 4, 8}, 5.0, 0.7);
  EXPECT_EQ(optimal_threshold(spec, -1e4), std::vector<int>{1});
  EXPECT_EQ(optimal_threshold(spec, 1e4), std::vector<int>{5});
}

TEST(OptimalThreshold, ReturnsBothMinimizersAtCoincidence) {
  const ArmSpec spec = make_arm({1, 3, 4, 8}, 5.0, 0.7);
  const double nu = index_bisection(spec, 2);
  EXPECT_EQ(optimal_threshold(spec, nu), (std::vector<int>{2, 3}));
}

TEST(OptimalThreshold, NondecreasingInLambda) {
  sim::RandomStream rng(5, testing::kTestStream, 2);
  for (int i = 0; i < 30; ++i) {
    const ArmSpec spec = testing::random_arm(rng);
    int prev = 1;
    for (double lambda : testing::linspace(-spec.tx_cost - 50, 50, 0.5)) {
      const int now = optimal_threshold(spec, lambda).front();
      EXPECT_GE(now, prev);
      prev = now;
    }
  }
}

TEST(IndexBisection, HandValuesAndCostShift) {
  const ArmSpec spec = linear_arm(10, 0.0, 1.0);
  EXPECT_NEAR(index_bisection(spec, 1), 1.0, 1e-12);
  EXPECT_NEAR(index_bisection(spec, 2), 3.0, 1e-12);
  const ArmSpec shifted = linear_arm(10, 5.0, 1.0);
  for (int theta = 1; theta <= 10; ++theta) {
    EXPECT_NEAR(index_bisection(shifted, theta), index_bisection(spec, theta) - 5.0, 1e-9);
  }
}

TEST(IndexBisection, ClosedFormMatchesBracketing) {
  sim::RandomStream rng(5, testing::kTestStream, 3);
  for (int i = 0; i < 30; ++i) {
    const ArmSpec spec = testing::random_arm(rng);
    for (int theta = 1; theta <= spec.state_cap(); ++theta) {
      EXPECT_NEAR(index_bisection(spec, theta), coincident_point_by_bisection(spec, theta), 1e-8);
    }
  }
}

TEST(IndexBisection, RejectsOutOfRangeState) {
  const ArmSpec spec = linear_arm(4, 0.0, 0.5);
  EXPECT_THROW(index_bisection(spec, 0), ValidationError);
  EXPECT_THROW(index_bisection(spec, 5), ValidationError);
}

TEST(PerformanceDifference, Identity) {
  const ArmSpec spec = make_arm({0, 2, 2.5, 6, 9, 15, 16}, 3.0, 0.6);
  const FiniteMdp mdp = arm_mdp(spec, -1.0);
  const PolicyTable p2 = threshold_table({2}, 7), p4 = threshold_table({4}, 7);
  EXPECT_NEAR(performance_difference(mdp, p2, p2), 0.0, 1e-12);
  const double direct = evaluate_policy(mdp, p2).gain - evaluate_policy(mdp, p4).gain;
  EXPECT_NEAR(performance_difference(mdp, p2, p4), direct, 1e-8);
}

TEST(PerformanceDifference, NonnegativeAgainstOptimum) {
  sim::RandomStream rng(5, testing::kTestStream, 4);
  const ArmSpec spec = testing::random_arm(rng, {6, 6, 0.3, 0.9, 0.0, 10.0});
  const FiniteMdp mdp = arm_mdp(spec, 2.0);
  const PolicyTable opt = policy_iteration(mdp).policy;
  for (int theta = 1; theta <= 7; ++theta) {
    EXPECT_GE(performance_difference(mdp, threshold_table({theta}, 6), opt), -1e-9);
  }
}

TEST(ValueMonotonicity, HoldsWhereThresholdIsOptimal) {
  sim::RandomStream rng(5, testing::kTestStream, 5);
  for (int i = 0; i < 100; ++i) {
    const ArmSpec spec = testing::random_arm(rng);
    for (int theta = 1; theta <= spec.state_cap(); ++theta) {
      const double lo = theta == 1 ? -spec.tx_cost - 50 : index_bisection(spec, theta - 1);
      const double hi = index_bisection(spec, theta);
      if (lo > hi) continue;
      EXPECT_TRUE(verify_value_monotonicity(spec, theta, 0.5 * (lo + hi)));
    }
  }
}

TEST(ValueMonotonicity, FlatCostsGiveTies) {
  const ArmSpec spec = make_arm({3, 3, 3, 3}, 0.0, 0.5);
  for (int theta = 1; theta <= 5; ++theta) EXPECT_TRUE(verify_value_monotonicity(spec, theta, 0.0));
}

TEST(ValueMonotonicity, FailsForLargeThresholdUnderNegativeCost) {
  // Below theta, V(s+1) - V(s) = J - h(s); a very negative lambda makes J
  // smaller than h(theta - 1), so the bias decreases there.
  const ArmSpec spec = linear_arm(6, 0.0, 0.8);
  EXPECT_FALSE(verify_value_monotonicity(spec, 5, -100.0));
  const Evaluation e = evaluate_policy(arm_mdp(spec, -100.0), threshold_table({5}, 6));
  EXPECT_NEAR(e.bias[4] - e.bias[3], e.gain - spec.holding(4), 1e-9);
}

}  // namespace
}  // namespace aoi::exact
