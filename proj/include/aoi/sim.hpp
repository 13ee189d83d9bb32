#pragma once

// Discrete-time environment, online channel estimation and the trial /
// suite runners used for the online experiments.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aoi/composite.hpp"
#include "aoi/index_learn.hpp"
#include "aoi/policy.hpp"

namespace aoi::sim {

/// A 64-bit Mersenne Twister with platform-independent uniform and
/// Bernoulli draws (the std distributions are implementation-defined).
class RandomStream {
 public:
  /// Stream `index` of family `family` under `master`, seeded through std::seed_seq.
  RandomStream(std::uint64_t master, std::uint32_t family, std::uint64_t index);

  double uniform();  // [0, 1) with 53 random bits
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Stream families; one stream per entity within each family.
enum StreamFamily : std::uint32_t {
  kHoldingStream = 1,
  kChannelParamStream = 2,
  kChannelDrawStream = 3,
  kTrialSeedStream = 4,
};

struct ScenarioSpec {
  std::size_t users = 10;
  std::size_t channels = 5;
  int states = 10;
  double h_min = 0.0, h_max = 20.0;
  double rho_min = 0.7, rho_max = 0.9;
  double tau_min = 10.0, tau_max = 20.0;
  int horizon = 250;
  int repeats = 10;
  std::uint64_t seed = 1;

  /// N > M >= 1, S >= 2, ordered ranges, rho within (0, 1], tau >= 0.
  void validate() const;
};

/// Per user S uniform draws in [h_min, h_max] sorted ascending; per channel
/// rho ~ U[rho_min, rho_max] and tau ~ U[tau_min, tau_max].
SystemConfig generate_scenario(const ScenarioSpec& spec, std::uint64_t seed);

/// One Bernoulli stream per channel for a trial seed.
std::vector<RandomStream> channel_streams(std::size_t channels, std::uint64_t seed);

struct StepResult {
  AoIState next;
  std::vector<std::optional<bool>> outcomes;  // gamma_m for activated channels
  double cost = 0.0;
};

/// Draws gamma_m once per activated channel from that channel's stream.
StepResult env_step(const SystemConfig& config, const AoIState& state, const Assignment& action,
                    std::span<RandomStream> streams);

/// Estimates below this floor are raised to it before computing indices.
inline constexpr double kMinRateForIndex = 0.05;

class ChannelEstimator {
 public:
  explicit ChannelEstimator(std::size_t channels);

  /// successes / attempts, or the optimistic prior 1.0 before the first attempt.
  double rho_hat(std::size_t m) const;
  std::vector<double> rho_hat() const;
  std::int64_t attempts(std::size_t m) const { return attempts_.at(m); }
  std::int64_t successes(std::size_t m) const { return successes_.at(m); }
  const std::vector<std::int64_t>& attempt_counts() const { return attempts_; }

  /// Counts one attempt for each activated channel; outcomes must be present
  /// exactly for the activated channels.
  void update(const Assignment& action, std::span<const std::optional<bool>> outcomes);

 private:
  std::vector<std::int64_t> attempts_;
  std::vector<std::int64_t> successes_;
};

struct TrajectoryRecord {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<double> costs;
  std::vector<Assignment> assignments;
  std::vector<double> moving_avg;  // cumulative mean of costs[0..k]

  double final_moving_avg() const { return moving_avg.empty() ? 0.0 : moving_avg.back(); }
};

struct TrialOptions {
  learn::StepSchedule schedule = learn::default_schedule();
  double rebuild_tolerance = 1e-6;
  const exact::CompositeMdp* composite = nullptr;  // only for opt
  const exact::PolicyTable* optimal = nullptr;
};

/// Closed loop from the all-ones state: estimate rho -> refresh indices ->
/// schedule -> step -> update estimator (and learners for idx-v-r-q).
TrajectoryRecord run_trial(const SystemConfig& config, const SchedulerKind& kind, int horizon, std::uint64_t seed,
                           const TrialOptions& options = {});

/// Closed loop under a fixed state-feedback rule; returns per-epoch costs.
std::vector<double> simulate_fixed(const SystemConfig& config,
                                   const std::function<Assignment(const AoIState&)>& rule, std::int64_t horizon,
                                   std::uint64_t seed);

/// Seed of repeat r under a master seed (independent of the repeat count).
std::uint64_t repeat_seed(std::uint64_t master, int repeat);

struct PolicySummary {
  SchedulerKind kind;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over repeats
  std::vector<double> finals;
};

struct SuiteResult {
  SystemConfig config;
  std::vector<PolicySummary> summaries;
  std::vector<std::vector<TrajectoryRecord>> trials;  // [policy][repeat]
};

/// Runs every kind on one scenario drawn from spec.seed, for spec.repeats
/// trial seeds, on up to `workers` threads. Output order is deterministic.
SuiteResult run_suite(const ScenarioSpec& spec, std::span<const SchedulerKind> kinds, unsigned workers = 1);

/// Header "epoch,cost,moving_avg"; epochs are 1-based.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);
/// Reads costs and moving averages back (policy/seed/assignments are not stored).
TrajectoryRecord read_trajectory_csv(std::istream& in);

/// {"<policy>": {"mean": .., "std": .., "final_moving_avg": [..]}, ...}
std::string summary_json(const SuiteResult& result);

}  // namespace aoi::sim
