#pragma once

// Subcommand implementations behind the aoi_sched executable. Each command
// is a pure function of its manifest: same manifest, same output tree.

#include <cstddef>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aoi/exact.hpp"
#include "aoi/policy.hpp"
#include "aoi/sim.hpp"

namespace aoi::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kSizeRefusal = 3,
  kNumerical = 4,
};

/// Maps the library's exception types onto exit codes (unknown -> 1).
int exit_code_for(const std::exception& e);

struct RunManifest {
  std::string subcommand;
  sim::ScenarioSpec scenario;
  std::vector<SchedulerKind> policies;
  std::filesystem::path out_dir = "out";
  unsigned workers = 1;
  std::vector<std::size_t> sizes;  // sweep: user counts, M = N / 2
  exact::ExactLimits limits;

  /// Output directory creatable, policies non-empty, scenario valid.
  void validate() const;
};

/// Applies "key = value" lines (# starts a comment) onto `spec`. Keys are the
/// ScenarioSpec field names; unknown keys are rejected.
void apply_scenario_text(std::istream& in, sim::ScenarioSpec& spec);
void apply_scenario_file(const std::filesystem::path& path, sim::ScenarioSpec& spec);
/// Inverse of apply_scenario_text.
std::string scenario_text(const sim::ScenarioSpec& spec);

struct OfflineRow {
  SchedulerKind kind;
  double gain = 0.0;
};

/// Exact average cost of each policy on the known-rate system. Heuristics are
/// expanded to full state-feedback tables; opt runs policy iteration.
std::vector<OfflineRow> evaluate_offline(const SystemConfig& config, const std::vector<SchedulerKind>& kinds,
                                         const exact::ExactLimits& limits = {});

/// Induced state-feedback table of a heuristic with rho_hat = true rates.
exact::PolicyTable induced_policy(const exact::CompositeMdp& composite, const SchedulerKind& kind);

/// offline.csv: scenario,policy,gain,gap_to_opt (one scenario per repeat).
void cmd_offline(const RunManifest& manifest);
/// trials/<policy>_rep<r>.csv and summary.json.
void cmd_online(const RunManifest& manifest);
/// index_table.csv, index_check.csv, thresholds.csv and envelope.csv.
/// Returns false when some entry had a degenerate activation gap.
bool cmd_index(const RunManifest& manifest);
/// sweep.csv: N,M,policy,mean,std.
void cmd_sweep(const RunManifest& manifest);

/// File-name-safe policy tag (':' becomes '_').
std::string file_tag(const SchedulerKind& kind);

}  // namespace aoi::cli
