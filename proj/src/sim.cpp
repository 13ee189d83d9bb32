#include "aoi/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>
#include <atomic>
#include <mutex>

#include <json.hpp>

#include "aoi/errors.hpp"

namespace aoi::sim {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t master, std::uint32_t family, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32), family,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t master, std::uint32_t family, std::uint64_t index)
    : engine_(seeded_engine(master, family, index)) {}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

void ScenarioSpec::validate() const {
  if (channels < 1) throw ValidationError("need at least one channel");
  if (users <= channels) throw ValidationError("need more users than channels (N > M)");
  if (states < 2) throw ValidationError("state cap must be at least 2");
  if (!(h_min <= h_max)) throw ValidationError("holding-cost range is empty");
  if (!(rho_min > 0.0 && rho_min <= rho_max && rho_max <= 1.0)) {
    throw ValidationError("success-rate range must satisfy 0 < rho_min <= rho_max <= 1");
  }
  if (!(tau_min >= 0.0 && tau_min <= tau_max)) throw ValidationError("transmission-cost range must satisfy 0 <= tau_min <= tau_max");
  if (horizon < 0) throw ValidationError("horizon must be nonnegative");
  if (repeats < 1) throw ValidationError("need at least one repeat");
}

SystemConfig generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  SystemConfig config;
  for (std::size_t n = 0; n < spec.users; ++n) {
    RandomStream rng(seed, kHoldingStream, n);
    std::vector<double> h(static_cast<std::size_t>(spec.states));
    for (double& x : h) x = rng.uniform(spec.h_min, spec.h_max);
    std::sort(h.begin(), h.end());
    config.holding.push_back(std::move(h));
  }
  for (std::size_t m = 0; m < spec.channels; ++m) {
    RandomStream rng(seed, kChannelParamStream, m);
    Channel c;
    c.success_prob = rng.uniform(spec.rho_min, spec.rho_max);
    c.tx_cost = rng.uniform(spec.tau_min, spec.tau_max);
    config.channels.push_back(c);
  }
  config.validate();
  return config;
}

std::vector<RandomStream> channel_streams(std::size_t channels, std::uint64_t seed) {
  std::vector<RandomStream> out;
  out.reserve(channels);
  for (std::size_t m = 0; m < channels; ++m) out.emplace_back(seed, kChannelDrawStream, m);
  return out;
}

StepResult env_step(const SystemConfig& config, const AoIState& state, const Assignment& action,
                    std::span<RandomStream> streams) {
  require_admissible(action, config.users(), config.channel_count());
  if (streams.size() != config.channel_count()) throw ValidationError("need one random stream per channel");
  StepResult out;
  out.cost = joint_stage_cost(config, state, action);
  out.outcomes.assign(config.channel_count(), std::nullopt);
  out.next = state;
  for (std::size_t n = 0; n < config.users(); ++n) {
    const int c = action.choice[n];
    bool success = false;
    if (c > 0) {
      const auto m = static_cast<std::size_t>(c - 1);
      success = streams[m].bernoulli(config.channels[m].success_prob);
      out.outcomes[m] = success;
    }
    out.next.ages[n] = arm_transition(state.ages[n], c > 0, success, config.cap(n));
  }
  return out;
}

ChannelEstimator::ChannelEstimator(std::size_t channels) : attempts_(channels, 0), successes_(channels, 0) {}

double ChannelEstimator::rho_hat(std::size_t m) const {
  if (attempts_.at(m) == 0) return 1.0;
  return static_cast<double>(successes_[m]) / static_cast<double>(attempts_[m]);
}

std::vector<double> ChannelEstimator::rho_hat() const {
  std::vector<double> out(attempts_.size());
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = rho_hat(m);
  return out;
}

void ChannelEstimator::update(const Assignment& action, std::span<const std::optional<bool>> outcomes) {
  if (outcomes.size() != attempts_.size()) throw ValidationError("need one outcome slot per channel");
  require_admissible(action, action.choice.size(), attempts_.size());
  std::vector<bool> active(attempts_.size(), false);
  for (int c : action.choice) {
    if (c > 0) active[static_cast<std::size_t>(c - 1)] = true;
  }
  for (std::size_t m = 0; m < attempts_.size(); ++m) {
    if (active[m] != outcomes[m].has_value()) {
      throw ValidationError("outcomes must be reported exactly for the activated channels");
    }
    if (!active[m]) continue;
    ++attempts_[m];
    if (*outcomes[m]) ++successes_[m];
  }
}

namespace {

std::vector<double> clamp_for_index(std::vector<double> rho) {
  for (double& r : rho) r = std::clamp(r, kMinRateForIndex, 1.0);
  return rho;
}

}  // namespace

TrajectoryRecord run_trial(const SystemConfig& config, const SchedulerKind& kind, int horizon, std::uint64_t seed,
                           const TrialOptions& options) {
  config.validate();
  if (horizon < 0) throw ValidationError("horizon must be nonnegative");
  const std::size_t channels = config.channel_count();

  TrajectoryRecord record;
  record.policy = to_string(kind);
  record.seed = seed;

  auto streams = channel_streams(channels, seed);
  ChannelEstimator estimator(channels);
  AoIState state = AoIState::fresh(config);

  std::optional<IndexTable> table;
  std::vector<double> built_for;
  std::optional<learn::LearnerBank> bank;
  if (kind.tag == SchedulerTag::kIndexValueQ) {
    // Learned indices start from the analytic index under the optimistic prior rho = 1.
    bank.emplace(config);
    const IndexTable prior = build_index_table(config, std::vector<double>(channels, 1.0));
    for (std::size_t m = 0; m < channels; ++m) {
      for (std::size_t n = 0; n < config.users(); ++n) {
        for (int theta = 1; theta <= config.cap(n); ++theta) bank->at(m, n, theta).set_lambda(prior.at(m, n, theta));
      }
    }
  }
  UcbState ucb{1, {}, kind.sigma};

  double total = 0.0;
  for (int k = 1; k <= horizon; ++k) {
    const std::vector<double> rho_hat = estimator.rho_hat();
    if (bank) {
      table = bank->table();
    } else if (kind.uses_index_table()) {
      bool stale = !table;
      for (std::size_t m = 0; !stale && m < channels; ++m) {
        stale = std::abs(rho_hat[m] - built_for[m]) > options.rebuild_tolerance;
      }
      if (stale) {
        table = build_index_table(config, clamp_for_index(rho_hat));
        built_for = rho_hat;
      }
    }
    ucb.epoch = k;
    ucb.tx_counts = estimator.attempt_counts();

    ScheduleInputs in{config, state, rho_hat};
    in.table = table ? &*table : nullptr;
    in.ucb = &ucb;
    in.composite = options.composite;
    in.optimal = options.optimal;
    const Assignment action = schedule(kind, in);

    StepResult step = env_step(config, state, action, streams);
    estimator.update(action, step.outcomes);
    if (bank) learn::synchronous_sweep(*bank, std::span<const std::optional<bool>>(step.outcomes), options.schedule);

    total += step.cost;
    record.costs.push_back(step.cost);
    record.assignments.push_back(action);
    record.moving_avg.push_back(total / static_cast<double>(k));
    state = std::move(step.next);
  }
  return record;
}

std::vector<double> simulate_fixed(const SystemConfig& config,
                                   const std::function<Assignment(const AoIState&)>& rule, std::int64_t horizon,
                                   std::uint64_t seed) {
  config.validate();
  auto streams = channel_streams(config.channel_count(), seed);
  AoIState state = AoIState::fresh(config);
  std::vector<double> costs;
  costs.reserve(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)));
  for (std::int64_t k = 0; k < horizon; ++k) {
    StepResult step = env_step(config, state, rule(state), streams);
    costs.push_back(step.cost);
    state = std::move(step.next);
  }
  return costs;
}

std::uint64_t repeat_seed(std::uint64_t master, int repeat) {
  RandomStream rng(master, kTrialSeedStream, static_cast<std::uint64_t>(repeat));
  return static_cast<std::uint64_t>(rng.uniform() * 0x1.0p53);
}

SuiteResult run_suite(const ScenarioSpec& spec, std::span<const SchedulerKind> kinds, unsigned workers) {
  spec.validate();
  SuiteResult result;
  result.config = generate_scenario(spec, spec.seed);
  const auto repeats = static_cast<std::size_t>(spec.repeats);
  result.trials.assign(kinds.size(), std::vector<TrajectoryRecord>(repeats));

  // Each task owns its environment, estimator and learners; slots are preassigned.
  const std::size_t tasks = kinds.size() * repeats;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t p = t / repeats, r = t % repeats;
      try {
        result.trials[p][r] =
            run_trial(result.config, kinds[p], spec.horizon, repeat_seed(spec.seed, static_cast<int>(r)));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned pool = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(tasks)));
  if (pool == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned i = 0; i < pool; ++i) threads.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t p = 0; p < kinds.size(); ++p) {
    PolicySummary summary{kinds[p], 0.0, 0.0, {}};
    for (const auto& trial : result.trials[p]) summary.finals.push_back(trial.final_moving_avg());
    for (double f : summary.finals) summary.mean += f;
    summary.mean /= static_cast<double>(repeats);
    for (double f : summary.finals) summary.std += (f - summary.mean) * (f - summary.mean);
    summary.std = std::sqrt(summary.std / static_cast<double>(repeats));
    result.summaries.push_back(std::move(summary));
  }
  return result;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
  out << "epoch,cost,moving_avg\n" << std::setprecision(17);
  for (std::size_t k = 0; k < record.costs.size(); ++k) {
    out << k + 1 << ',' << record.costs[k] << ',' << record.moving_avg[k] << '\n';
  }
}

TrajectoryRecord read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "epoch,cost,moving_avg") {
    throw ValidationError("trajectory CSV must start with header epoch,cost,moving_avg");
  }
  TrajectoryRecord record;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string epoch, cost, avg;
    if (!std::getline(fields, epoch, ',') || !std::getline(fields, cost, ',') || !std::getline(fields, avg)) {
      throw ValidationError("malformed trajectory CSV row: " + line);
    }
    if (std::stoul(epoch) != record.costs.size() + 1) throw ValidationError("trajectory epochs must be consecutive from 1");
    record.costs.push_back(std::stod(cost));
    record.moving_avg.push_back(std::stod(avg));
  }
  return record;
}

std::string summary_json(const SuiteResult& result) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& s : result.summaries) {
    doc[to_string(s.kind)] = {{"mean", s.mean}, {"std", s.std}, {"final_moving_avg", s.finals}};
  }
  return doc.dump(2);
}

}  // namespace aoi::sim
