#pragma once

// The joint N-user, M-channel scheduling MDP.
//
// Users and channels are 0-based in C++ containers. An Assignment stores,
// per user, 0 for "idle" or the 1-based id of the channel it transmits on.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "aoi/arm.hpp"

namespace aoi {

struct Channel {
  double success_prob = 1.0;  // rho_m
  double tx_cost = 0.0;       // tau_m

  bool operator==(const Channel&) const = default;
};

struct SystemConfig {
  std::vector<std::vector<double>> holding;  // h_n(1..S_n) per user
  std::vector<Channel> channels;

  std::size_t users() const { return holding.size(); }
  std::size_t channel_count() const { return channels.size(); }
  int cap(std::size_t user) const { return static_cast<int>(holding[user].size()); }

  /// The arm for user `user` on 0-based channel `channel`.
  ArmSpec arm(std::size_t channel, std::size_t user) const;
  /// Same arm with a substituted success probability (estimated channels).
  ArmSpec arm(std::size_t channel, std::size_t user, double rho) const;

  /// N >= 1, M >= 1, every curve a valid holding cost, every channel valid.
  void validate() const;

  bool operator==(const SystemConfig&) const = default;
};

struct AoIState {
  std::vector<int> ages;

  static AoIState fresh(const SystemConfig& config);
  bool operator==(const AoIState&) const = default;
};

struct Assignment {
  std::vector<int> choice;

  static Assignment idle(std::size_t users) { return Assignment{std::vector<int>(users, 0)}; }
  std::size_t active_count() const;
  bool operator==(const Assignment&) const = default;
  auto operator<=>(const Assignment&) const = default;
};

/// True iff every entry is in [0, M] and each channel serves at most one user.
bool is_admissible(const Assignment& a, std::size_t users, std::size_t channels);
/// Throws ValidationError naming the violation.
void require_admissible(const Assignment& a, std::size_t users, std::size_t channels);

/// sum_j C(N, j) * M! / (M - j)!, saturating at UINT64_MAX.
std::uint64_t count_actions(std::size_t users, std::size_t channels);

inline constexpr std::uint64_t kDefaultActionLimit = 1'000'000;

/// Every admissible assignment in lexicographic order of the choice vector.
/// Throws SizeLimitError when the count exceeds `limit`.
std::vector<Assignment> enumerate_actions(std::size_t users, std::size_t channels,
                                          std::uint64_t limit = kDefaultActionLimit);

/// Mixed-radix index of joint ages: index = sum_n (age_n - 1) * prod_{j<n} S_j.
class StateSpace {
 public:
  explicit StateSpace(std::vector<int> caps);
  static StateSpace of(const SystemConfig& config);

  std::size_t size() const { return size_; }
  std::size_t encode(const AoIState& s) const;
  AoIState decode(std::size_t index) const;
  const std::vector<int>& caps() const { return caps_; }

 private:
  std::vector<int> caps_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 1;
};

struct Successor {
  AoIState next;
  double prob;
};

/// All next states with positive probability (branches on each active user).
std::vector<Successor> joint_successors(const SystemConfig& config, const AoIState& s,
                                        const Assignment& a);

double joint_transition_prob(const SystemConfig& config, const AoIState& s, const Assignment& a,
                             const AoIState& next);

/// sum_n h_n(s_n) + sum over active users of tau of their channel.
double joint_stage_cost(const SystemConfig& config, const AoIState& s, const Assignment& a);

}  // namespace aoi
