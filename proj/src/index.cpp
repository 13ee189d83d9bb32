#include "aoi/index.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "aoi/errors.hpp"

namespace aoi {

namespace {

StationaryDist threshold_distribution(int theta, double rho, int cap) {
  if (theta == cap + 1) return stationary_exact({theta}, rho, cap);
  return stationary_closed_form({theta}, rho, cap);
}

}  // namespace

double analytic_index(const ArmSpec& spec, int theta) {
  spec.validate();
  const int cap = spec.state_cap();
  if (theta < 1 || theta > cap) throw ValidationError("index defined for 1 <= theta <= S");
  const double rho = spec.success_prob;
  const CostSplit lo = cost_split(spec, {theta}, threshold_distribution(theta, rho, cap));
  const CostSplit hi = cost_split(spec, {theta + 1}, threshold_distribution(theta + 1, rho, cap));
  const double gap = lo.activation - hi.activation;
  if (!(gap > kDegenerateGap)) {
    std::ostringstream msg;
    msg << "degenerate activation gap " << gap << " at theta " << theta;
    throw NumericalError(msg.str());
  }
  return (hi.holding - lo.holding) / gap - spec.tx_cost;
}

IndexTable::IndexTable(std::size_t channels, std::vector<int> caps, double fill) : caps_(std::move(caps)) {
  values_.resize(channels);
  for (auto& per_user : values_) {
    per_user.reserve(caps_.size());
    for (int c : caps_) per_user.emplace_back(static_cast<std::size_t>(c), fill);
  }
}

IndexTable build_index_table(const SystemConfig& config, std::span<const double> rho_hat) {
  if (rho_hat.size() != config.channel_count()) throw ValidationError("need one rate estimate per channel");
  std::vector<int> caps;
  for (std::size_t n = 0; n < config.users(); ++n) caps.push_back(config.cap(n));
  IndexTable table(config.channel_count(), caps);
  for (std::size_t m = 0; m < config.channel_count(); ++m) {
    for (std::size_t n = 0; n < config.users(); ++n) {
      const ArmSpec spec = config.arm(m, n, rho_hat[m]);
      for (int s = 1; s <= caps[n]; ++s) {
        try {
          table.at(m, n, s) = analytic_index(spec, s);
        } catch (const NumericalError& e) {
          std::ostringstream msg;
          msg << "index for channel " << m + 1 << ", user " << n + 1 << ", age " << s << ": " << e.what();
          throw NumericalError(msg.str());
        }
      }
    }
  }
  return table;
}

void write_index_csv(std::ostream& out, const IndexTable& table) {
  out << "m,n,s,nu\n";
  out << std::setprecision(17);
  for (std::size_t m = 0; m < table.channels(); ++m) {
    for (std::size_t n = 0; n < table.users(); ++n) {
      for (int s = 1; s <= table.cap(n); ++s) {
        out << m + 1 << ',' << n + 1 << ',' << s << ',' << table.at(m, n, s) << '\n';
      }
    }
  }
}

IndexTable read_index_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "m,n,s,nu") throw ValidationError("index CSV must start with header m,n,s,nu");
  std::map<std::tuple<std::size_t, std::size_t, int>, double> rows;
  std::size_t channels = 0, users = 0;
  std::map<std::size_t, int> caps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string m, n, s, nu;
    if (!std::getline(fields, m, ',') || !std::getline(fields, n, ',') || !std::getline(fields, s, ',') ||
        !std::getline(fields, nu)) {
      throw ValidationError("malformed index CSV row: " + line);
    }
    const auto mi = std::stoul(m), ni = std::stoul(n);
    const int si = std::stoi(s);
    if (mi == 0 || ni == 0 || si < 1) throw ValidationError("index CSV ids are 1-based");
    rows[{mi - 1, ni - 1, si}] = std::stod(nu);
    channels = std::max<std::size_t>(channels, mi);
    users = std::max<std::size_t>(users, ni);
    caps[ni - 1] = std::max(caps[ni - 1], si);
  }
  std::vector<int> cap_list(users, 0);
  for (const auto& [n, c] : caps) cap_list[n] = c;
  IndexTable table(channels, cap_list, std::numeric_limits<double>::quiet_NaN());
  if (rows.size() != channels * [&] {
        std::size_t total = 0;
        for (int c : cap_list) total += static_cast<std::size_t>(c);
        return total;
      }()) {
    throw ValidationError("index CSV does not cover every (m, n, s) triple");
  }
  for (const auto& [key, value] : rows) {
    const auto& [m, n, s] = key;
    table.at(m, n, s) = value;
  }
  return table;
}

double ucb_augment(double nu, const UcbState& ucb, std::size_t channel) {
  if (ucb.sigma == 0.0) return nu;
  if (ucb.epoch < 1) throw ValidationError("UCB epoch starts at 1");
  const std::int64_t uses = ucb.tx_counts.at(channel);
  if (uses < 0) throw ValidationError("negative transmission count");
  if (uses == 0) {
    return ucb.sigma > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return nu + ucb.sigma * std::sqrt(std::log(static_cast<double>(ucb.epoch)) / static_cast<double>(uses));
}

}  // namespace aoi
