#pragma once

// Shared generators for the test binaries. Every generator draws from a
// RandomStream so test instances are reproducible across platforms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "aoi/arm.hpp"
#include "aoi/exact.hpp"
#include "aoi/sim.hpp"

namespace aoi::testing {

inline constexpr std::uint32_t kTestStream = 99;

// S sorted uniform draws in [lo, hi].
inline std::vector<double> random_holding(sim::RandomStream& rng, int cap, double lo = 0.0, double hi = 20.0) {
  std::vector<double> h(static_cast<std::size_t>(cap));
  for (double& x : h) x = rng.uniform(lo, hi);
  std::sort(h.begin(), h.end());
  return h;
}

inline int random_int(sim::RandomStream& rng, int lo, int hi) {
  const int span = hi - lo + 1;
  return std::min(hi, lo + static_cast<int>(rng.uniform() * span));
}

struct ArmRanges {
  int cap_min = 2, cap_max = 12;
  double rho_min = 0.1, rho_max = 1.0;
  double tau_min = 0.0, tau_max = 20.0;
};

inline ArmSpec random_arm(sim::RandomStream& rng, const ArmRanges& r = {}) {
  const int cap = random_int(rng, r.cap_min, r.cap_max);
  ArmSpec spec;
  spec.holding_cost = random_holding(rng, cap);
  spec.success_prob = std::max(1e-3, rng.uniform(r.rho_min, r.rho_max));
  if (r.rho_max >= 1.0 && rng.uniform() < 0.05) spec.success_prob = 1.0;
  spec.tx_cost = rng.uniform(r.tau_min, r.tau_max);
  spec.validate();
  return spec;
}

// h(s) = s.
inline ArmSpec linear_arm(int cap, double tau, double rho) {
  std::vector<double> h;
  for (int s = 1; s <= cap; ++s) h.push_back(s);
  return make_arm(h, tau, rho);
}

inline std::vector<double> linspace(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) out.push_back(lo + step * i);
  return out;
}

// Mean and batch-means standard error of a long correlated series.
struct BatchEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline BatchEstimate batch_means(const std::vector<double>& xs, std::size_t batches) {
  const std::size_t len = xs.size() / batches;
  std::vector<double> means;
  double total = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += xs[i];
    means.push_back(s / static_cast<double>(len));
    total += means.back();
  }
  const double mean = total / static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= static_cast<double>(batches - 1);
  return {mean, std::sqrt(var / static_cast<double>(batches))};
}

// Smallest long-run average cost over the closed classes of the chain
// induced by `policy`. Works for multichain policies; O(n^3) closure, so
// meant for small chains.
inline double best_class_gain(const exact::FiniteMdp& mdp, const exact::PolicyTable& policy) {
  const std::size_t n = mdp.states();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < n; ++s) {
    reach[s][s] = true;
    for (const auto& t : mdp.next(s, policy[s])) {
      if (t.prob > 0.0) reach[s][t.next] = true;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;

  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> done(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    bool recurrent = true;
    for (std::size_t j = 0; j < n; ++j) recurrent = recurrent && (!reach[s][j] || reach[j][s]);
    if (!recurrent || done[s]) continue;
    std::vector<std::size_t> cls;
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[s][j]) {
        cls.push_back(j);
        done[j] = true;
      }
    }
    const auto k = static_cast<Eigen::Index>(cls.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      a(i, i) -= 1.0;
      for (const auto& t : mdp.next(cls[static_cast<std::size_t>(i)], policy[cls[static_cast<std::size_t>(i)]])) {
        const auto pos = std::find(cls.begin(), cls.end(), t.next) - cls.begin();
        a(pos, i) += t.prob;
      }
    }
    a.row(k - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;
    const Eigen::VectorXd d = a.fullPivLu().solve(b);
    double gain = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const std::size_t st = cls[static_cast<std::size_t>(i)];
      gain += d(i) * mdp.cost(st, policy[st]);
    }
    best = std::min(best, gain);
  }
  return best;
}

}  // namespace aoi::testing
