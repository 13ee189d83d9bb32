#include "aoi/exact.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "aoi/errors.hpp"

namespace aoi::exact {

FiniteMdp::FiniteMdp(std::size_t states, std::size_t actions)
    : states_(states), actions_(actions), cost_(states * actions, 0.0), next_(states * actions) {
  if (states == 0 || actions == 0) throw ValidationError("MDP needs at least one state and one action");
}

void FiniteMdp::set(std::size_t s, std::size_t a, double cost, std::vector<Transition> next) {
  if (s >= states_ || a >= actions_) throw ValidationError("state/action index out of range");
  double total = 0.0;
  for (const auto& t : next) {
    if (t.next >= states_) throw ValidationError("transition target out of range");
    total += t.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("transition row does not sum to 1");
  cost_[slot(s, a)] = cost;
  next_[slot(s, a)] = std::move(next);
}

FiniteMdp arm_mdp(const ArmSpec& spec, double lambda) {
  spec.validate();
  const int cap = spec.state_cap();
  FiniteMdp mdp(static_cast<std::size_t>(cap), 2);
  const double rho = spec.success_prob;
  for (int s = 1; s <= cap; ++s) {
    const auto idx = static_cast<std::size_t>(s - 1);
    const auto up = static_cast<std::size_t>(arm_transition(s, false, false, cap) - 1);
    mdp.set(idx, 0, arm_stage_cost(spec, s, false, lambda), {{up, 1.0}});
    std::vector<Transition> active{{0, rho}};
    if (rho < 1.0) active.push_back({up, 1.0 - rho});
    mdp.set(idx, 1, arm_stage_cost(spec, s, true, lambda), std::move(active));
  }
  return mdp;
}

PolicyTable threshold_table(ThresholdPolicy policy, int cap) {
  if (policy.theta < 1 || policy.theta > cap + 1) throw ValidationError("threshold out of range");
  PolicyTable table(static_cast<std::size_t>(cap));
  for (int s = 1; s <= cap; ++s) table[static_cast<std::size_t>(s - 1)] = policy.transmits(s) ? 1 : 0;
  return table;
}

std::size_t CompositeMdp::action_index(const Assignment& a) const {
  const auto it = std::lower_bound(actions.begin(), actions.end(), a);
  if (it == actions.end() || *it != a) throw ValidationError("assignment is not in the action list");
  return static_cast<std::size_t>(it - actions.begin());
}

CompositeMdp build_composite(const SystemConfig& config, const ExactLimits& limits) {
  config.validate();
  StateSpace space = StateSpace::of(config);
  if (space.size() > limits.max_states) {
    std::ostringstream msg;
    msg << "joint state space has " << space.size() << " states, above the exact-solver limit of "
        << limits.max_states << " (dense policy iteration on N=4, M=2, S=10 already runs out of memory on a "
        << "16 GB machine)";
    throw SizeLimitError(msg.str());
  }
  auto actions = enumerate_actions(config.users(), config.channel_count(), limits.max_actions);
  FiniteMdp mdp(space.size(), actions.size());
  for (std::size_t s = 0; s < space.size(); ++s) {
    const AoIState state = space.decode(s);
    for (std::size_t a = 0; a < actions.size(); ++a) {
      std::vector<Transition> next;
      for (const auto& succ : joint_successors(config, state, actions[a])) {
        next.push_back({space.encode(succ.next), succ.prob});
      }
      mdp.set(s, a, joint_stage_cost(config, state, actions[a]), std::move(next));
    }
  }
  return CompositeMdp{config, std::move(space), std::move(actions), std::move(mdp)};
}

namespace {

void check_policy(const FiniteMdp& mdp, const PolicyTable& policy) {
  if (policy.size() != mdp.states()) throw ValidationError("policy size differs from the state count");
  for (std::size_t a : policy) {
    if (a >= mdp.actions()) throw ValidationError("policy action out of range");
  }
}

// Iterative Tarjan; returns the SCC id of every state.
std::vector<std::size_t> strongly_connected(const FiniteMdp& mdp, const PolicyTable& policy,
                                            std::size_t& count) {
  constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
  const std::size_t n = mdp.states();
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> work;  // (state, next edge)
  std::size_t counter = 0;
  count = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    work.push_back({root, 0});
    while (!work.empty()) {
      auto& [v, edge] = work.back();
      if (edge == 0 && index[v] == kUnset) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      const auto succ = mdp.next(v, policy[v]);
      bool descended = false;
      while (edge < succ.size()) {
        const std::size_t w = succ[edge++].next;
        if (index[w] == kUnset) {
          work.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      const std::size_t done = v;
      if (low[done] == index[done]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != done);
        ++count;
      }
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
  return comp;
}

// Partial pivoting can suffer large element growth on these systems (the
// all-ones gain column / normalization row), so fall back to full pivoting
// whenever the partial-pivot solution leaves a visible residual.
Eigen::VectorXd solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = a.partialPivLu().solve(b);
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (x.allFinite() && (a * x - b).cwiseAbs().maxCoeff() <= 1e-12 * scale) return x;
  return a.fullPivLu().solve(b);
}

}  // namespace

std::size_t recurrent_class_count(const FiniteMdp& mdp, const PolicyTable& policy) {
  check_policy(mdp, policy);
  std::size_t count = 0;
  const auto comp = strongly_connected(mdp, policy, count);
  std::vector<bool> leaks(count, false);
  for (std::size_t s = 0; s < mdp.states(); ++s) {
    for (const auto& t : mdp.next(s, policy[s])) {
      if (t.prob > 0.0 && comp[t.next] != comp[s]) leaks[comp[s]] = true;
    }
  }
  return static_cast<std::size_t>(std::count(leaks.begin(), leaks.end(), false));
}

Evaluation evaluate_policy(const FiniteMdp& mdp, const PolicyTable& policy, std::size_t anchor) {
  check_policy(mdp, policy);
  if (anchor >= mdp.states()) throw ValidationError("anchor state out of range");
  if (const std::size_t classes = recurrent_class_count(mdp, policy); classes != 1) {
    std::ostringstream msg;
    msg << "policy induces " << classes << " recurrent classes; the Poisson equation needs a unichain policy";
    throw NumericalError(msg.str());
  }

  const auto n = static_cast<Eigen::Index>(mdp.states());
  // Unknowns: V(0..n-1), J. Rows 0..n-1 are the Poisson equation, row n pins V(anchor).
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto su = static_cast<std::size_t>(s);
    a(s, s) += 1.0;
    for (const auto& t : mdp.next(su, policy[su])) a(s, static_cast<Eigen::Index>(t.next)) -= t.prob;
    a(s, n) = 1.0;
    b(s) = mdp.cost(su, policy[su]);
  }
  a(n, static_cast<Eigen::Index>(anchor)) = 1.0;
  const Eigen::VectorXd x = solve_dense(a, b);

  Evaluation eval;
  eval.gain = x(n);
  eval.bias.assign(x.data(), x.data() + n);
  eval.anchor = anchor;
  const double pin = eval.bias[anchor];
  for (double& v : eval.bias) v -= pin;
  const double residual = poisson_residual(mdp, policy, eval);
  if (!std::isfinite(residual) || residual > 1e-9) {
    std::ostringstream msg;
    msg << "Poisson system is singular or ill-conditioned (residual " << residual << ")";
    throw NumericalError(msg.str());
  }
  return eval;
}

double poisson_residual(const FiniteMdp& mdp, const PolicyTable& policy, const Evaluation& eval) {
  double worst = std::abs(eval.bias.at(eval.anchor));
  for (std::size_t s = 0; s < mdp.states(); ++s) {
    double expect = 0.0;
    for (const auto& t : mdp.next(s, policy[s])) expect += t.prob * eval.bias[t.next];
    worst = std::max(worst, std::abs(eval.bias[s] + eval.gain - mdp.cost(s, policy[s]) - expect));
  }
  return worst;
}

std::vector<double> stationary_distribution(const FiniteMdp& mdp, const PolicyTable& policy) {
  check_policy(mdp, policy);
  if (recurrent_class_count(mdp, policy) != 1) throw NumericalError("stationary distribution of a multichain policy is not unique");
  const auto n = static_cast<Eigen::Index>(mdp.states());
  // d^T (P - I) = 0  <=>  (P - I)^T d = 0; replace the last row by sum(d) = 1.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto su = static_cast<std::size_t>(s);
    a(s, s) -= 1.0;
    for (const auto& t : mdp.next(su, policy[su])) a(static_cast<Eigen::Index>(t.next), s) += t.prob;
  }
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::VectorXd d = solve_dense(a, b);
  std::vector<double> out(d.data(), d.data() + n);
  for (double& x : out) {
    if (x < -1e-9 || !std::isfinite(x)) throw NumericalError("stationary solve produced a negative mass");
    x = std::max(x, 0.0);
  }
  return out;
}

std::vector<double> relative_q_factors(const FiniteMdp& mdp, const Evaluation& eval) {
  std::vector<double> q(mdp.states() * mdp.actions());
  for (std::size_t s = 0; s < mdp.states(); ++s) {
    for (std::size_t a = 0; a < mdp.actions(); ++a) {
      double expect = 0.0;
      for (const auto& t : mdp.next(s, a)) expect += t.prob * eval.bias[t.next];
      q[s * mdp.actions() + a] = mdp.cost(s, a) - eval.gain + expect;
    }
  }
  return q;
}

PolicyIterationResult policy_iteration(const FiniteMdp& mdp, int max_iterations) {
  constexpr double kImprove = 1e-10;
  PolicyIterationResult result;
  result.policy.assign(mdp.states(), 0);
  for (int it = 1; it <= max_iterations; ++it) {
    result.evaluation = evaluate_policy(mdp, result.policy);
    result.iterations = it;
    const auto q = relative_q_factors(mdp, result.evaluation);
    bool changed = false;
    for (std::size_t s = 0; s < mdp.states(); ++s) {
      const double* row = q.data() + s * mdp.actions();
      const double best = *std::min_element(row, row + mdp.actions());
      if (row[result.policy[s]] <= best + kImprove) continue;
      for (std::size_t a = 0; a < mdp.actions(); ++a) {
        if (row[a] <= best + kImprove) {
          result.policy[s] = a;
          break;
        }
      }
      changed = true;
    }
    if (!changed) return result;
  }
  throw NumericalError("policy iteration did not converge within the iteration limit");
}

std::vector<int> optimal_threshold(const ArmSpec& spec, double lambda, double tol) {
  spec.validate();
  const int cap = spec.state_cap();
  std::vector<double> cost;
  for (int theta = 1; theta <= cap + 1; ++theta) {
    cost.push_back(average_cost(spec, {theta}).total(spec.tx_cost, lambda));
  }
  const double best = *std::min_element(cost.begin(), cost.end());
  std::vector<int> argmin;
  for (int theta = 1; theta <= cap + 1; ++theta) {
    if (cost[static_cast<std::size_t>(theta - 1)] <= best + tol) argmin.push_back(theta);
  }
  return argmin;
}

namespace {

double coincident_gap(const CostSplit& lo, const CostSplit& hi, double tau, double lambda) {
  return lo.total(tau, lambda) - hi.total(tau, lambda);
}

}  // namespace

double coincident_point_by_bisection(const ArmSpec& spec, int theta, double tol) {
  spec.validate();
  if (theta < 1 || theta > spec.state_cap()) throw ValidationError("index defined for 1 <= theta <= S");
  const CostSplit lo = average_cost(spec, {theta});
  const CostSplit hi = average_cost(spec, {theta + 1});
  const auto f = [&](double lambda) { return coincident_gap(lo, hi, spec.tx_cost, lambda); };

  // f is affine with slope activation(theta) - activation(theta + 1) > 0.
  double left = -1.0, right = 1.0;
  for (int k = 0; k < 400 && !(f(left) <= 0.0 && f(right) >= 0.0); ++k) {
    left *= 2.0;
    right *= 2.0;
    if (!std::isfinite(left)) break;
  }
  if (!(f(left) <= 0.0 && f(right) >= 0.0)) {
    throw NumericalError("no sign change of J(theta) - J(theta + 1) along lambda");
  }
  while (right - left > tol * std::max(1.0, std::abs(left) + std::abs(right))) {
    const double mid = 0.5 * (left + right);
    if (f(mid) < 0.0) {
      left = mid;
    } else {
      right = mid;
    }
  }
  return 0.5 * (left + right);
}

double index_bisection(const ArmSpec& spec, int theta) {
  spec.validate();
  if (theta < 1 || theta > spec.state_cap()) throw ValidationError("index defined for 1 <= theta <= S");
  const CostSplit lo = average_cost(spec, {theta});
  const CostSplit hi = average_cost(spec, {theta + 1});
  const double gap = lo.activation - hi.activation;
  if (!(gap > 0.0)) {
    std::ostringstream msg;
    msg << "activation frequency is flat between thresholds " << theta << " and " << theta + 1
        << " (gap " << gap << "); their costs never cross along lambda";
    throw NumericalError(msg.str());
  }
  if (gap < 1e-12) return coincident_point_by_bisection(spec, theta);
  return (hi.holding - lo.holding) / gap - spec.tx_cost;
}

double performance_difference(const FiniteMdp& mdp, const PolicyTable& pi1, const PolicyTable& pi2) {
  const auto d1 = stationary_distribution(mdp, pi1);
  const Evaluation e2 = evaluate_policy(mdp, pi2);
  const auto q2 = relative_q_factors(mdp, e2);
  double total = 0.0;
  for (std::size_t s = 0; s < mdp.states(); ++s) {
    total += d1[s] * (q2[s * mdp.actions() + pi1[s]] - q2[s * mdp.actions() + pi2[s]]);
  }
  return total;
}

bool verify_value_monotonicity(const ArmSpec& spec, int theta, double lambda, double tol) {
  const FiniteMdp mdp = arm_mdp(spec, lambda);
  const Evaluation eval = evaluate_policy(mdp, threshold_table({theta}, spec.state_cap()));
  for (std::size_t s = 1; s < eval.bias.size(); ++s) {
    if (eval.bias[s] < eval.bias[s - 1] - tol) return false;
  }
  return true;
}

}  // namespace aoi::exact
