#pragma once

// Whittle indices of the user/channel arms and the per-channel UCB bonus.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aoi/arm.hpp"
#include "aoi/composite.hpp"

namespace aoi {

/// Activation gaps at or below this are treated as degenerate.
inline constexpr double kDegenerateGap = 1e-12;

/// Closed-form Whittle index of state theta:
///   (E_{d^{theta+1}}[h] - E_{d^theta}[h]) /
///   (E_{d^theta}[1(s >= theta)] - E_{d^{theta+1}}[1(s >= theta+1)]) - tau
/// using the closed-form stationary distributions (theta + 1 = S + 1 uses the
/// point mass at S).
double analytic_index(const ArmSpec& spec, int theta);

/// nu[m][n][s - 1] for 0-based channel m and user n.
class IndexTable {
 public:
  IndexTable() = default;
  IndexTable(std::size_t channels, std::vector<int> caps, double fill = 0.0);

  std::size_t channels() const { return values_.size(); }
  std::size_t users() const { return caps_.size(); }
  int cap(std::size_t user) const { return caps_[user]; }

  double& at(std::size_t m, std::size_t n, int age) { return values_[m][n][static_cast<std::size_t>(age - 1)]; }
  double at(std::size_t m, std::size_t n, int age) const {
    return values_[m][n][static_cast<std::size_t>(age - 1)];
  }

  bool operator==(const IndexTable&) const = default;

 private:
  std::vector<int> caps_;
  std::vector<std::vector<std::vector<double>>> values_;
};

/// Builds the full table with rho_hat substituted for each channel's success
/// probability. Throws NumericalError naming (m, n, s) on a degenerate gap.
IndexTable build_index_table(const SystemConfig& config, std::span<const double> rho_hat);

/// CSV with header "m,n,s,nu" (1-based m, n, s); values printed round-trip exact.
void write_index_csv(std::ostream& out, const IndexTable& table);
IndexTable read_index_csv(std::istream& in);

struct UcbState {
  std::int64_t epoch = 1;                 // k
  std::vector<std::int64_t> tx_counts;    // N_m[k]
  double sigma = 0.0;
};

/// nu + sigma * sqrt(ln k / N_m). With N_m = 0 the bonus is +inf for
/// sigma > 0 and -inf for sigma < 0.
double ucb_augment(double nu, const UcbState& ucb, std::size_t channel);

}  // namespace aoi
