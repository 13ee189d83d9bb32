#include "aoi/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aoi/errors.hpp"

namespace aoi {

bool SchedulerKind::uses_index_table() const {
  switch (tag) {
    case SchedulerTag::kIndexValue:
    case SchedulerTag::kIndexChannel:
    case SchedulerTag::kIndexValueR:
    case SchedulerTag::kIndexChannelR:
    case SchedulerTag::kIndexValueUcb:
    case SchedulerTag::kIndexValueQ:
      return true;
    default:
      return false;
  }
}

bool SchedulerKind::energy_saving() const {
  return tag == SchedulerTag::kIndexValueR || tag == SchedulerTag::kIndexChannelR ||
         tag == SchedulerTag::kIndexValueUcb || tag == SchedulerTag::kIndexValueQ;
}

SchedulerKind parse_scheduler(std::string_view text) {
  struct Entry {
    std::string_view name;
    SchedulerTag tag;
  };
  static constexpr Entry kTags[] = {
      {"opt", SchedulerTag::kOptimal},         {"idx-v", SchedulerTag::kIndexValue},
      {"idx-c", SchedulerTag::kIndexChannel},  {"idx-v-r", SchedulerTag::kIndexValueR},
      {"idx-c-r", SchedulerTag::kIndexChannelR}, {"idx-v-r-q", SchedulerTag::kIndexValueQ},
      {"m-S", SchedulerTag::kMyopicHolding},   {"m-T", SchedulerTag::kMyopicAge},
  };
  for (const auto& e : kTags) {
    if (text == e.name) return SchedulerKind{e.tag, 0.0};
  }
  constexpr std::string_view kUcb = "idx-v-r:";
  if (text.starts_with(kUcb) && text.size() > kUcb.size()) {
    const std::string number(text.substr(kUcb.size()));
    std::size_t used = 0;
    double sigma = 0.0;
    try {
      sigma = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == number.size() && std::isfinite(sigma)) return SchedulerKind{SchedulerTag::kIndexValueUcb, sigma};
  }
  throw ValidationError("unknown scheduler '" + std::string(text) + "'");
}

std::string to_string(const SchedulerKind& kind) {
  switch (kind.tag) {
    case SchedulerTag::kOptimal: return "opt";
    case SchedulerTag::kIndexValue: return "idx-v";
    case SchedulerTag::kIndexChannel: return "idx-c";
    case SchedulerTag::kIndexValueR: return "idx-v-r";
    case SchedulerTag::kIndexChannelR: return "idx-c-r";
    case SchedulerTag::kIndexValueQ: return "idx-v-r-q";
    case SchedulerTag::kMyopicHolding: return "m-S";
    case SchedulerTag::kMyopicAge: return "m-T";
    case SchedulerTag::kIndexValueUcb: {
      std::ostringstream out;
      out << "idx-v-r:" << kind.sigma;
      return out.str();
    }
  }
  return "?";
}

std::vector<SchedulerKind> parse_scheduler_list(std::string_view comma_separated) {
  std::vector<SchedulerKind> out;
  std::size_t start = 0;
  while (start <= comma_separated.size()) {
    const std::size_t end = std::min(comma_separated.find(',', start), comma_separated.size());
    const auto item = comma_separated.substr(start, end - start);
    if (!item.empty()) out.push_back(parse_scheduler(item));
    start = end + 1;
  }
  if (out.empty()) throw ValidationError("empty policy list");
  return out;
}

IndexMatrix current_indices(const AoIState& state, const IndexTable& table) {
  if (state.ages.size() != table.users()) throw ValidationError("state and index table disagree on the user count");
  IndexMatrix omega(table.channels(), std::vector<double>(table.users()));
  for (std::size_t m = 0; m < table.channels(); ++m) {
    for (std::size_t n = 0; n < table.users(); ++n) omega[m][n] = table.at(m, n, state.ages[n]);
  }
  return omega;
}

namespace {

// Indices 0..size-1 ordered by descending key, stable on ties (lower id first).
std::vector<std::size_t> rank_descending(std::span<const double> key) {
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}

}  // namespace

Assignment myopic_schedule(std::span<const double> q, std::span<const double> rho_hat) {
  Assignment a = Assignment::idle(q.size());
  const auto users = rank_descending(q);
  const auto channels = rank_descending(rho_hat);
  for (std::size_t i = 0; i < std::min(users.size(), channels.size()); ++i) {
    a.choice[users[i]] = static_cast<int>(channels[i]) + 1;
  }
  return a;
}

Assignment idx_value_schedule(const IndexMatrix& omega, bool energy_saving) {
  const std::size_t channels = omega.size();
  const std::size_t users = channels == 0 ? 0 : omega.front().size();
  std::vector<double> flat;
  flat.reserve(channels * users);
  for (const auto& row : omega) {
    if (row.size() != users) throw ValidationError("ragged index matrix");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  Assignment a = Assignment::idle(users);
  std::vector<bool> used(channels, false);
  std::size_t taken = 0;
  for (std::size_t entry : rank_descending(flat)) {
    if (taken == channels) break;
    const std::size_t m = entry / users, n = entry % users;
    if (a.choice[n] != 0 || used[m]) continue;
    if (energy_saving && !(flat[entry] > 0.0)) break;  // later entries are no larger
    a.choice[n] = static_cast<int>(m) + 1;
    used[m] = true;
    ++taken;
  }
  return a;
}

Assignment idx_value_schedule(const AoIState& state, const IndexTable& table, bool energy_saving) {
  return idx_value_schedule(current_indices(state, table), energy_saving);
}

Assignment idx_channel_schedule(const IndexMatrix& omega, std::span<const double> rho_hat, bool energy_saving) {
  if (rho_hat.size() != omega.size()) throw ValidationError("need one rate estimate per channel");
  const std::size_t users = omega.empty() ? 0 : omega.front().size();
  Assignment a = Assignment::idle(users);
  for (std::size_t m : rank_descending(rho_hat)) {
    if (omega[m].size() != users) throw ValidationError("ragged index matrix");
    for (std::size_t n : rank_descending(omega[m])) {
      if (a.choice[n] != 0) continue;
      if (energy_saving && !(omega[m][n] > 0.0)) break;
      a.choice[n] = static_cast<int>(m) + 1;
      break;
    }
  }
  return a;
}

Assignment idx_channel_schedule(const AoIState& state, const IndexTable& table, std::span<const double> rho_hat,
                                bool energy_saving) {
  return idx_channel_schedule(current_indices(state, table), rho_hat, energy_saving);
}

Assignment schedule(const SchedulerKind& kind, const ScheduleInputs& in) {
  const std::size_t users = in.config.users();
  if (in.state.ages.size() != users) throw ValidationError("state length differs from the number of users");
  if (in.rho_hat.size() != in.config.channel_count()) throw ValidationError("need one rate estimate per channel");

  switch (kind.tag) {
    case SchedulerTag::kOptimal: {
      if (!in.composite || !in.optimal) {
        throw ValidationError("opt needs a solved policy table and is only available offline");
      }
      return in.composite->actions.at(in.optimal->at(in.composite->space.encode(in.state)));
    }
    case SchedulerTag::kMyopicHolding:
    case SchedulerTag::kMyopicAge: {
      std::vector<double> q(users);
      for (std::size_t n = 0; n < users; ++n) {
        q[n] = kind.tag == SchedulerTag::kMyopicAge
                   ? static_cast<double>(in.state.ages[n])
                   : in.config.holding[n].at(static_cast<std::size_t>(in.state.ages[n] - 1));
      }
      return myopic_schedule(q, in.rho_hat);
    }
    default:
      break;
  }

  if (!in.table) throw ValidationError(to_string(kind) + " needs an index table");
  IndexMatrix omega = current_indices(in.state, *in.table);
  if (kind.tag == SchedulerTag::kIndexValueUcb && kind.sigma != 0.0) {
    if (!in.ucb) throw ValidationError(to_string(kind) + " needs UCB counters");
    for (std::size_t m = 0; m < omega.size(); ++m) {
      for (double& v : omega[m]) v = ucb_augment(v, *in.ucb, m);
    }
  }
  switch (kind.tag) {
    case SchedulerTag::kIndexChannel:
    case SchedulerTag::kIndexChannelR:
      return idx_channel_schedule(omega, in.rho_hat, kind.energy_saving());
    default:
      return idx_value_schedule(omega, kind.energy_saving());
  }
}

}  // namespace aoi
