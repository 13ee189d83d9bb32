#pragma once

// Scheduling policies: myopic heuristics, index-value and channel-based
// index schedulers, the energy-saving refinement and UCB variants.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/composite.hpp"
#include "aoi/exact.hpp"
#include "aoi/index.hpp"

namespace aoi {

enum class SchedulerTag {
  kOptimal,        // opt
  kIndexValue,     // idx-v
  kIndexChannel,   // idx-c
  kIndexValueR,    // idx-v-r
  kIndexChannelR,  // idx-c-r
  kIndexValueUcb,  // idx-v-r:<sigma>
  kIndexValueQ,    // idx-v-r-q
  kMyopicHolding,  // m-S
  kMyopicAge,      // m-T
};

struct SchedulerKind {
  SchedulerTag tag = SchedulerTag::kIndexValueR;
  double sigma = 0.0;  // only for kIndexValueUcb

  bool uses_index_table() const;
  bool energy_saving() const;
  bool operator==(const SchedulerKind&) const = default;
};

/// Parses the abbreviations opt, idx-v, idx-c, idx-v-r, idx-c-r,
/// idx-v-r:<sigma>, idx-v-r-q, m-S, m-T. Throws ValidationError otherwise.
SchedulerKind parse_scheduler(std::string_view text);
std::string to_string(const SchedulerKind& kind);
std::vector<SchedulerKind> parse_scheduler_list(std::string_view comma_separated);

/// omega[m][n] = nu_{m,n}(s_n).
using IndexMatrix = std::vector<std::vector<double>>;
IndexMatrix current_indices(const AoIState& state, const IndexTable& table);

/// Top-M users by q matched in order to channels by descending rho_hat.
/// Ties go to the lower user / channel id.
Assignment myopic_schedule(std::span<const double> q, std::span<const double> rho_hat);

/// Walk all (m, n) entries by descending omega (ties: lower m, then lower n),
/// taking a pair when both the user and the channel are still free. With
/// energy saving only entries with omega > 0 are eligible.
Assignment idx_value_schedule(const IndexMatrix& omega, bool energy_saving);
Assignment idx_value_schedule(const AoIState& state, const IndexTable& table, bool energy_saving);

/// Channels by descending rho_hat each take the free user of highest omega.
Assignment idx_channel_schedule(const IndexMatrix& omega, std::span<const double> rho_hat, bool energy_saving);
Assignment idx_channel_schedule(const AoIState& state, const IndexTable& table, std::span<const double> rho_hat,
                                bool energy_saving);

/// Everything a scheduler may consult at one epoch.
struct ScheduleInputs {
  const SystemConfig& config;
  const AoIState& state;
  std::span<const double> rho_hat;
  const IndexTable* table = nullptr;          // analytic or learned indices
  const UcbState* ucb = nullptr;              // for idx-v-r:<sigma>
  const exact::CompositeMdp* composite = nullptr;  // for opt
  const exact::PolicyTable* optimal = nullptr;     // for opt
};

Assignment schedule(const SchedulerKind& kind, const ScheduleInputs& in);

}  // namespace aoi
