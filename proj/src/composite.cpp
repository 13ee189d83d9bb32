#include "aoi/composite.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "aoi/errors.hpp"

namespace aoi {

ArmSpec SystemConfig::arm(std::size_t channel, std::size_t user) const {
  return arm(channel, user, channels.at(channel).success_prob);
}

ArmSpec SystemConfig::arm(std::size_t channel, std::size_t user, double rho) const {
  return ArmSpec{holding.at(user), channels.at(channel).tx_cost, rho};
}

void SystemConfig::validate() const {
  if (holding.empty()) throw ValidationError("system needs at least one user");
  if (channels.empty()) throw ValidationError("system needs at least one channel");
  for (std::size_t n = 0; n < holding.size(); ++n) {
    for (std::size_t m = 0; m < channels.size(); ++m) {
      try {
        arm(m, n).validate();
      } catch (const ValidationError& e) {
        std::ostringstream msg;
        msg << "user " << n + 1 << ", channel " << m + 1 << ": " << e.what();
        throw ValidationError(msg.str());
      }
    }
  }
}

AoIState AoIState::fresh(const SystemConfig& config) {
  return AoIState{std::vector<int>(config.users(), 1)};
}

std::size_t Assignment::active_count() const {
  return static_cast<std::size_t>(std::count_if(choice.begin(), choice.end(), [](int c) { return c > 0; }));
}

namespace {

const char* admissibility_violation(const Assignment& a, std::size_t users, std::size_t channels) {
  if (a.choice.size() != users) return "assignment length differs from the number of users";
  std::vector<bool> used(channels + 1, false);
  for (int c : a.choice) {
    if (c < 0 || static_cast<std::size_t>(c) > channels) return "channel id out of range";
    if (c == 0) continue;
    if (used[static_cast<std::size_t>(c)]) return "a channel is assigned to more than one user";
    used[static_cast<std::size_t>(c)] = true;
  }
  return nullptr;
}

void enumerate_into(std::size_t user, std::vector<int>& current, std::vector<bool>& used,
                    std::size_t channels, std::vector<Assignment>& out) {
  if (user == current.size()) {
    out.push_back(Assignment{current});
    return;
  }
  for (std::size_t c = 0; c <= channels; ++c) {
    if (c > 0 && used[c]) continue;
    current[user] = static_cast<int>(c);
    if (c > 0) used[c] = true;
    enumerate_into(user + 1, current, used, channels, out);
    if (c > 0) used[c] = false;
  }
  current[user] = 0;
}

}  // namespace

bool is_admissible(const Assignment& a, std::size_t users, std::size_t channels) {
  return admissibility_violation(a, users, channels) == nullptr;
}

void require_admissible(const Assignment& a, std::size_t users, std::size_t channels) {
  if (const char* why = admissibility_violation(a, users, channels)) {
    throw ValidationError(std::string("inadmissible assignment: ") + why);
  }
}

std::uint64_t count_actions(std::size_t users, std::size_t channels) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const auto mul = [](std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > kMax / a) return kMax;
    return a * b;
  };
  std::uint64_t total = 0;
  std::uint64_t binom = 1;  // C(N, j)
  std::uint64_t perm = 1;   // M! / (M - j)!
  for (std::size_t j = 0; j <= std::min(users, channels); ++j) {
    if (j > 0) {
      // C(N, j) = C(N, j-1) * (N - j + 1) / j; divide first where exact to limit overflow.
      binom = mul(binom, users - j + 1);
      if (binom != kMax) binom /= j;
      perm = mul(perm, channels - j + 1);
    }
    const std::uint64_t term = mul(binom, perm);
    total = term > kMax - total ? kMax : total + term;
  }
  return total;
}

std::vector<Assignment> enumerate_actions(std::size_t users, std::size_t channels, std::uint64_t limit) {
  if (users == 0 || channels == 0) throw ValidationError("need at least one user and one channel");
  const std::uint64_t count = count_actions(users, channels);
  if (count > limit) {
    std::ostringstream msg;
    msg << "action space of " << count << " assignments exceeds the limit of " << limit
        << "; state/action space too large for exact methods";
    throw SizeLimitError(msg.str());
  }
  std::vector<Assignment> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<int> current(users, 0);
  std::vector<bool> used(channels + 1, false);
  enumerate_into(0, current, used, channels, out);
  return out;
}

StateSpace::StateSpace(std::vector<int> caps) : caps_(std::move(caps)) {
  stride_.reserve(caps_.size());
  for (int c : caps_) {
    if (c < 1) throw ValidationError("state caps must be positive");
    stride_.push_back(size_);
    if (size_ > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(c)) {
      throw SizeLimitError("joint state space overflows the index type");
    }
    size_ *= static_cast<std::size_t>(c);
  }
}

StateSpace StateSpace::of(const SystemConfig& config) {
  std::vector<int> caps;
  for (std::size_t n = 0; n < config.users(); ++n) caps.push_back(config.cap(n));
  return StateSpace(std::move(caps));
}

std::size_t StateSpace::encode(const AoIState& s) const {
  if (s.ages.size() != caps_.size()) throw ValidationError("state length differs from the number of users");
  std::size_t index = 0;
  for (std::size_t n = 0; n < caps_.size(); ++n) {
    if (s.ages[n] < 1 || s.ages[n] > caps_[n]) throw ValidationError("age outside its state space");
    index += static_cast<std::size_t>(s.ages[n] - 1) * stride_[n];
  }
  return index;
}

AoIState StateSpace::decode(std::size_t index) const {
  if (index >= size_) throw ValidationError("state index out of range");
  AoIState s{std::vector<int>(caps_.size())};
  for (std::size_t n = 0; n < caps_.size(); ++n) {
    s.ages[n] = static_cast<int>(index % static_cast<std::size_t>(caps_[n])) + 1;
    index /= static_cast<std::size_t>(caps_[n]);
  }
  return s;
}

std::vector<Successor> joint_successors(const SystemConfig& config, const AoIState& s, const Assignment& a) {
  require_admissible(a, config.users(), config.channel_count());
  std::vector<Successor> out{{s, 1.0}};
  for (std::size_t n = 0; n < config.users(); ++n) {
    const int cap = config.cap(n);
    const int c = a.choice[n];
    if (c == 0) {
      for (auto& branch : out) branch.next.ages[n] = arm_transition(s.ages[n], false, false, cap);
      continue;
    }
    const double rho = config.channels[static_cast<std::size_t>(c - 1)].success_prob;
    std::vector<Successor> split;
    split.reserve(out.size() * 2);
    for (const auto& branch : out) {
      Successor ok = branch;
      ok.next.ages[n] = arm_transition(s.ages[n], true, true, cap);
      ok.prob *= rho;
      split.push_back(std::move(ok));
      if (rho < 1.0) {
        Successor fail = branch;
        fail.next.ages[n] = arm_transition(s.ages[n], true, false, cap);
        fail.prob *= 1.0 - rho;
        split.push_back(std::move(fail));
      }
    }
    out = std::move(split);
  }
  return out;
}

double joint_transition_prob(const SystemConfig& config, const AoIState& s, const Assignment& a,
                             const AoIState& next) {
  require_admissible(a, config.users(), config.channel_count());
  if (s.ages.size() != config.users() || next.ages.size() != config.users()) {
    throw ValidationError("state length differs from the number of users");
  }
  double p = 1.0;
  for (std::size_t n = 0; n < config.users(); ++n) {
    const int cap = config.cap(n);
    const int c = a.choice[n];
    const int stay = arm_transition(s.ages[n], false, false, cap);
    if (c == 0) {
      if (next.ages[n] != stay) return 0.0;
      continue;
    }
    const double rho = config.channels[static_cast<std::size_t>(c - 1)].success_prob;
    double pn = 0.0;
    if (next.ages[n] == 1) pn += rho;
    if (next.ages[n] == stay) pn += 1.0 - rho;
    p *= pn;
  }
  return p;
}

double joint_stage_cost(const SystemConfig& config, const AoIState& s, const Assignment& a) {
  require_admissible(a, config.users(), config.channel_count());
  double cost = 0.0;
  for (std::size_t n = 0; n < config.users(); ++n) {
    cost += config.holding[n].at(static_cast<std::size_t>(s.ages[n] - 1));
    if (a.choice[n] > 0) cost += config.channels[static_cast<std::size_t>(a.choice[n] - 1)].tx_cost;
  }
  return cost;
}

}  // namespace aoi
