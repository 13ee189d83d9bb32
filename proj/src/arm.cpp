#include "aoi/arm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aoi/errors.hpp"

namespace aoi {

namespace {

void check_rho(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    std::ostringstream msg;
    msg << "success probability must lie in (0, 1], got " << rho;
    throw ValidationError(msg.str());
  }
}

void check_theta(int theta, int cap, int max_theta) {
  if (cap < 1) throw ValidationError("state cap must be positive");
  if (theta < 1 || theta > max_theta) {
    std::ostringstream msg;
    msg << "threshold " << theta << " outside [1, " << max_theta << "] for cap " << cap;
    throw ValidationError(msg.str());
  }
}

StationaryDist point_mass(int cap, int age) {
  StationaryDist d{std::vector<double>(static_cast<std::size_t>(cap), 0.0)};
  d.probs[static_cast<std::size_t>(age - 1)] = 1.0;
  return d;
}

}  // namespace

void ArmSpec::validate() const {
  if (holding_cost.size() < 2) throw ValidationError("arm needs a state cap of at least 2");
  for (std::size_t i = 1; i < holding_cost.size(); ++i) {
    if (holding_cost[i] < holding_cost[i - 1]) {
      std::ostringstream msg;
      msg << "holding cost decreases between ages " << i << " and " << i + 1;
      throw ValidationError(msg.str());
    }
  }
  for (double h : holding_cost) {
    if (!std::isfinite(h)) throw ValidationError("holding cost must be finite");
  }
  check_rho(success_prob);
  if (!(tx_cost >= 0.0) || !std::isfinite(tx_cost)) {
    throw ValidationError("transmission cost must be finite and nonnegative");
  }
}

ArmSpec make_arm(std::vector<double> holding_cost, double tx_cost, double success_prob) {
  ArmSpec spec{std::move(holding_cost), tx_cost, success_prob};
  spec.validate();
  return spec;
}

int arm_transition(int age, bool active, bool success, int cap) {
  if (age < 1 || age > cap) {
    std::ostringstream msg;
    msg << "age " << age << " outside [1, " << cap << "]";
    throw ValidationError(msg.str());
  }
  if (active && success) return 1;
  return std::min(age + 1, cap);
}

double arm_stage_cost(const ArmSpec& spec, int age, bool active, double lambda) {
  if (age < 1 || age > spec.state_cap()) throw ValidationError("age outside the arm's state space");
  return spec.holding(age) + (active ? spec.tx_cost + lambda : 0.0);
}

StationaryDist stationary_exact(ThresholdPolicy policy, double rho, int cap) {
  check_rho(rho);
  check_theta(policy.theta, cap, cap + 1);
  if (policy.theta == cap + 1) return point_mass(cap, cap);

  const Eigen::Index n = cap;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int s = 1; s <= cap; ++s) {
    const int up = std::min(s + 1, cap);
    if (policy.transmits(s)) {
      p(s - 1, 0) += rho;
      p(s - 1, up - 1) += 1.0 - rho;
    } else {
      p(s - 1, up - 1) += 1.0;
    }
  }

  // d (P - I) = 0 with one balance row swapped for sum(d) = 1.
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::VectorXd d = a.fullPivLu().solve(b);

  const double residual = (d.transpose() * p - d.transpose()).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-12) || std::abs(d.sum() - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "threshold chain balance residual " << residual << " exceeds 1e-12";
    throw NumericalError(msg.str());
  }

  StationaryDist out{std::vector<double>(d.data(), d.data() + n)};
  // Clean round-off on states that are transient (rho = 1 leaves ages above theta unvisited).
  for (double& x : out.probs) x = std::max(x, 0.0);
  return out;
}

double stationary_beta(int theta, double rho) {
  check_rho(rho);
  return 1.0 / (static_cast<double>(theta) - 1.0 + 1.0 / rho);
}

StationaryDist stationary_closed_form(ThresholdPolicy policy, double rho, int cap) {
  check_rho(rho);
  check_theta(policy.theta, cap, cap);
  const int theta = policy.theta;
  const double beta = stationary_beta(theta, rho);
  const double fail = 1.0 - rho;

  StationaryDist d{std::vector<double>(static_cast<std::size_t>(cap), 0.0)};
  for (int z = 1; z < cap; ++z) {
    d.probs[static_cast<std::size_t>(z - 1)] = z < theta ? beta : std::pow(fail, z - theta) * beta;
  }
  d.probs[static_cast<std::size_t>(cap - 1)] = std::pow(fail, cap - theta) * beta / rho;
  return d;
}

CostSplit cost_split(const ArmSpec& spec, ThresholdPolicy policy, const StationaryDist& dist) {
  CostSplit split;
  for (int s = 1; s <= spec.state_cap(); ++s) {
    split.holding += dist.at(s) * spec.holding(s);
    if (policy.transmits(s)) split.activation += dist.at(s);
  }
  return split;
}

CostSplit average_cost(const ArmSpec& spec, ThresholdPolicy policy) {
  return cost_split(spec, policy, stationary_exact(policy, spec.success_prob, spec.state_cap()));
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("distributions differ in length");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace aoi
