#pragma once

// Brute-force exact dynamic programming on small, fully discretized
// instances. Used as ground truth for the approximate schemes.

#include <functional>
#include <map>
#include <vector>

#include "seqroll/adaptive.hpp"
#include "seqroll/rollout.hpp"

namespace seqroll {

inline constexpr Index kDefaultLeafGuard = 1'000'000;
/// Actions whose Q-factor is within this (relative) of the minimum are optimal.
inline constexpr double kOptimalSetTolerance = 1e-10;

struct EnumerableInstance {
  BoProblem problem;
  Index leaf_guard = kDefaultLeafGuard;
};

struct DpResult {
  double value = 0.0;
  std::vector<Index> optimal_first_actions;
  std::vector<double> first_q_factors;  ///< per observation index
};

/// Past observations (u_1..u_k, z_1..z_k) identifying a tree node.
struct InfoVector {
  std::vector<Index> observed;
  std::vector<double> values;
};

namespace detail {

inline Index saturating_pow(Index base, Index exp) {
  Index r = 1;
  for (Index e = 0; e < exp; ++e) {
    if (base != 0 && r > std::numeric_limits<Index>::max() / base) return std::numeric_limits<Index>::max();
    r *= base;
  }
  return r;
}

inline void check_dp_guard(const EnumerableInstance& inst, Index stages) {
  const Index leaves = saturating_pow(inst.problem.model.size() * inst.problem.grid.size(), stages);
  if (leaves > inst.leaf_guard)
    throw GuardExceeded("observation tree has " + std::to_string(leaves) + " leaves, guard is " +
                        std::to_string(inst.leaf_guard));
}

inline std::vector<Index> near_minimizers(const std::vector<double>& q) {
  double best = q.front();
  for (double v : q) best = std::min(best, v);
  std::vector<Index> set;
  for (Index u = 0; u < q.size(); ++u)
    if (q[u] <= best + kOptimalSetTolerance * std::max(1.0, std::abs(best))) set.push_back(u);
  return set;
}

inline double belief_dp(const GaussianBelief& belief, const BoProblem& problem, Index stage,
                        std::vector<double>* first_q = nullptr) {
  if (stage >= problem.horizon) return terminal_cost(belief, problem.costs);
  std::vector<double> q(problem.model.size());
  for (Index u = 0; u < problem.model.size(); ++u) {
    double expected = 0.0;
    for (Index j = 0; j < problem.grid.size(); ++j) {
      if (problem.grid.probs[j] == 0.0) continue;
      const double z = grid_observation(belief, problem.model, u, problem.grid, j);
      expected += problem.grid.probs[j] * belief_dp(gaussian_update(belief, problem.model, u, z), problem, stage + 1);
    }
    q[u] = problem.model.cost(u) + expected;
  }
  if (first_q) *first_q = q;
  return *std::min_element(q.begin(), q.end());
}

}  // namespace detail

/// One-shot conditioning of the prior on all observations in `info`, via the
/// joint Gaussian of (theta, z_1..z_K). Independent of gaussian_update.
inline GaussianBelief batch_condition(const GaussianBelief& prior, const ObservationModel& model, const InfoVector& info) {
  const auto k = static_cast<Eigen::Index>(info.observed.size());
  if (k == 0) return prior;
  const auto m = static_cast<Eigen::Index>(prior.dimension());
  Matrix a(k, m);
  Vector r(k);
  Vector z(k);
  for (Eigen::Index row = 0; row < k; ++row) {
    const Index u = info.observed[static_cast<Index>(row)];
    a.row(row) = model.direction(u).transpose();
    r[row] = model.noise_variances[u];
    z[row] = info.values[static_cast<Index>(row)];
  }
  const Matrix cross = prior.covariance * a.transpose();   // Cov(theta, z)
  Matrix innovation = a * cross;                             // Cov(z)
  innovation.diagonal() += r;
  const Matrix gain = innovation.completeOrthogonalDecomposition().pseudoInverse();
  GaussianBelief post;
  post.mean = prior.mean + cross * (gain * (z - a * prior.mean));
  post.covariance = prior.covariance - cross * gain * cross.transpose();
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose());
  return post;
}

/// Optimal cost-to-go J*_stage(belief) by backward recursion over beliefs.
inline double exact_value_from(const EnumerableInstance& inst, const GaussianBelief& belief, Index stage) {
  detail::check_dp_guard(inst, inst.problem.horizon - std::min(stage, inst.problem.horizon));
  return detail::belief_dp(belief, inst.problem, stage);
}

/// J*_0(b_0) and every minimizing first observation.
inline DpResult exact_dp_value(const EnumerableInstance& inst) {
  detail::check_dp_guard(inst, inst.problem.horizon);
  DpResult result;
  result.value = detail::belief_dp(inst.problem.prior, inst.problem, 0, &result.first_q_factors);
  if (!result.first_q_factors.empty()) result.optimal_first_actions = detail::near_minimizers(result.first_q_factors);
  return result;
}

namespace detail {

inline double info_dp(const EnumerableInstance& inst, InfoVector& info, std::vector<double>* first_q) {
  const BoProblem& p = inst.problem;
  const GaussianBelief belief = batch_condition(p.prior, p.model, info);
  if (info.observed.size() >= p.horizon) return terminal_cost(belief, p.costs);
  std::vector<double> q(p.model.size());
  for (Index u = 0; u < p.model.size(); ++u) {
    const Vector& a = p.model.direction(u);
    const double pred_mean = a.dot(belief.mean);
    const double pred_sd = std::sqrt(std::max(0.0, a.dot(belief.covariance * a)) + p.model.noise_variances[u]);
    double expected = 0.0;
    for (Index j = 0; j < p.grid.size(); ++j) {
      if (p.grid.probs[j] == 0.0) continue;
      info.observed.push_back(u);
      info.values.push_back(pred_mean + pred_sd * p.grid.points[j]);
      expected += p.grid.probs[j] * info_dp(inst, info, nullptr);
      info.observed.pop_back();
      info.values.pop_back();
    }
    q[u] = p.model.cost(u) + expected;
  }
  if (first_q) *first_q = q;
  return *std::min_element(q.begin(), q.end());
}

}  // namespace detail

/// The same optimum computed over information vectors I_k, with each node's
/// posterior recomputed from the prior by batch conditioning.
inline DpResult information_vector_dp_value(const EnumerableInstance& inst) {
  detail::check_dp_guard(inst, inst.problem.horizon);
  DpResult result;
  InfoVector root;
  result.value = detail::info_dp(inst, root, &result.first_q_factors);
  if (!result.first_q_factors.empty()) result.optimal_first_actions = detail::near_minimizers(result.first_q_factors);
  return result;
}

/// Closed-loop decision rule: observations to take at a tree node.
using BoPolicy = std::function<std::vector<Index>(const GaussianBelief&, Index stage, const InfoVector&)>;

namespace detail {

inline double policy_tree(const EnumerableInstance& inst, const BoPolicy& policy, const GaussianBelief& belief,
                          Index stage, InfoVector& info, Index& leaves) {
  const BoProblem& p = inst.problem;
  if (stage >= p.horizon) {
    if (++leaves > inst.leaf_guard) throw GuardExceeded("policy evaluation tree exceeded the leaf guard");
    return terminal_cost(belief, p.costs);
  }
  const auto batch = policy(belief, stage, info);
  if (batch.empty()) throw InvalidArgument("policy returned no observation");
  double expected = 0.0;
  // Outcomes of a batch, conditioned sequentially; info records each value.
  std::function<void(const GaussianBelief&, Index, double)> expand = [&](const GaussianBelief& b, Index pos, double prob) {
    if (pos == batch.size()) {
      expected += prob * policy_tree(inst, policy, b, stage + 1, info, leaves);
      return;
    }
    const Index u = batch[pos];
    for (Index j = 0; j < p.grid.size(); ++j) {
      if (p.grid.probs[j] == 0.0) continue;
      const double z = grid_observation(b, p.model, u, p.grid, j);
      info.observed.push_back(u);
      info.values.push_back(z);
      expand(gaussian_update(b, p.model, u, z), pos + 1, prob * p.grid.probs[j]);
      info.observed.pop_back();
      info.values.pop_back();
    }
  };
  expand(belief, 0, 1.0);
  return batch_cost(p.model, batch) + expected;
}

}  // namespace detail

/// Exact expected cost of a closed-loop policy by forward tree enumeration.
inline double policy_value(const EnumerableInstance& inst, const BoPolicy& policy) {
  InfoVector info;
  Index leaves = 0;
  return detail::policy_tree(inst, policy, inst.problem.prior, 0, info, leaves);
}

/// The exact-DP optimal policy as a decision rule (lowest index among optimal).
inline BoPolicy optimal_policy(const EnumerableInstance& inst) {
  return [inst](const GaussianBelief& b, Index stage, const InfoVector&) {
    std::vector<double> q;
    detail::belief_dp(b, inst.problem, stage, &q);
    return std::vector<Index>{detail::near_minimizers(q).front()};
  };
}

inline BoPolicy base_policy_rule(const BoProblem& problem, BasePolicy base, Index agents = 1) {
  return [model = problem.model, base, agents](const GaussianBelief& b, Index, const InfoVector&) {
    return base.choose_batch(b, model, agents);
  };
}

inline BoPolicy rollout_policy_rule(const BoProblem& problem, BasePolicy base, RolloutConfig cfg) {
  return [problem, base, cfg](const GaussianBelief& b, Index stage, const InfoVector&) {
    return std::vector<Index>{select_rollout(b, problem, base, stage, cfg).choice};
  };
}

inline BoPolicy multiagent_policy_rule(const BoProblem& problem, BasePolicy base, RolloutConfig cfg, Index agents) {
  return [problem, base, cfg, agents](const GaussianBelief& b, Index stage, const InfoVector&) {
    return select_multiagent(b, problem, base, stage, cfg, agents).choice;
  };
}

// -- adaptive control ---------------------------------------------------------

struct AdaptiveDpOptions {
  Index node_guard = 5'000'000;
};

template <ParametricSystem Sys>
struct AdaptiveDpResult {
  double value = 0.0;
  std::vector<ControlOf<Sys>> optimal_first_controls;
  std::vector<double> first_q_factors;  ///< aligned with controls(x_0, 0)
};

namespace detail {

template <ParametricSystem Sys>
struct AdaptiveDp {
  const Sys& sys;
  AdaptiveDpOptions options;
  bool iterated_form;
  Index nodes = 0;

  void count_node() {
    if (++nodes > options.node_guard) throw GuardExceeded("adaptive DP exceeded its node guard");
  }

  // Information vector I_k is implicit in the recursion path; its sufficient
  // posterior b_k is carried alongside.
  double value(const StateOf<Sys>& x, const DiscreteBelief& b, Index k, std::vector<double>* first_q) {
    count_node();
    if (k >= sys.horizon()) return sys.terminal_cost(x);
    const auto controls = sys.controls(x, k);
    if (controls.empty()) throw InvalidArgument("empty control set at a reachable state");
    std::vector<double> q;
    q.reserve(controls.size());
    for (const auto& u : controls) q.push_back(iterated_form ? iterated_q(x, b, u, k) : direct_q(x, b, u, k));
    if (first_q) *first_q = q;
    return *std::min_element(q.begin(), q.end());
  }

  // E_{theta,w}{ g + J*_{k+1} } with the joint law grouped by next state.
  double direct_q(const StateOf<Sys>& x, const DiscreteBelief& b, const ControlOf<Sys>& u, Index k) {
    std::vector<StateOf<Sys>> next_states;
    std::vector<std::vector<double>> joint;  // joint[s][i] = P(theta^i, x' = s)
    double expected_cost = 0.0;
    for (Index i = 0; i < b.size(); ++i) {
      if (b.probs[i] == 0.0) continue;
      for (const auto& t : sys.transitions(x, i, u, k)) {
        const double pj = b.probs[i] * t.probability;
        if (pj == 0.0) continue;
        expected_cost += pj * t.cost;
        auto it = std::find(next_states.begin(), next_states.end(), t.next);
        if (it == next_states.end()) {
          next_states.push_back(t.next);
          joint.emplace_back(b.size(), 0.0);
          it = next_states.end() - 1;
        }
        joint[static_cast<Index>(it - next_states.begin())][i] += pj;
      }
    }
    double expected_future = 0.0;
    for (Index s = 0; s < next_states.size(); ++s) {
      double marginal = 0.0;
      for (double pj : joint[s]) marginal += pj;
      DiscreteBelief post{joint[s]};
      for (double& p : post.probs) p /= marginal;
      expected_future += marginal * value(next_states[s], post, k + 1, nullptr);
    }
    return expected_cost + expected_future;
  }

  // sum_i b^i E_w{ g(theta^i) + J*_{k+1}(I_k, f(theta^i, w), u) }.
  double iterated_q(const StateOf<Sys>& x, const DiscreteBelief& b, const ControlOf<Sys>& u, Index k) {
    std::map<StateOf<Sys>, double> child_value;
    const BeliefState<StateOf<Sys>> here{x, b};
    double total = 0.0;
    for (Index i = 0; i < b.size(); ++i) {
      if (b.probs[i] == 0.0) continue;
      double inner = 0.0;
      for (const auto& t : sys.transitions(x, i, u, k)) {
        if (t.probability == 0.0) continue;
        auto it = child_value.find(t.next);
        if (it == child_value.end()) {
          const DiscreteBelief post = belief_transition(here, u, t.next, sys, k);
          it = child_value.emplace(t.next, value(t.next, post, k + 1, nullptr)).first;
        }
        inner += t.probability * (t.cost + it->second);
      }
      total += b.probs[i] * inner;
    }
    return total;
  }
};

}  // namespace detail

/// Exact DP over information vectors with the theta-mixture expectation
/// written as sum_i b^i E_w{...}.
template <ParametricSystem Sys>
AdaptiveDpResult<Sys> exact_adaptive_dp(const Sys& sys, const AdaptiveDpOptions& options = {}) {
  detail::AdaptiveDp<Sys> dp{sys, options, true};
  AdaptiveDpResult<Sys> result;
  const auto x0 = sys.initial_state();
  result.value = dp.value(x0, sys.prior(), 0, &result.first_q_factors);
  const auto controls = sys.controls(x0, 0);
  for (Index j : detail::near_minimizers(result.first_q_factors)) result.optimal_first_controls.push_back(controls[j]);
  return result;
}

/// The same optimum with E_{theta,w} taken jointly, children grouped by x_{k+1}.
template <ParametricSystem Sys>
AdaptiveDpResult<Sys> exact_adaptive_dp_direct(const Sys& sys, const AdaptiveDpOptions& options = {}) {
  detail::AdaptiveDp<Sys> dp{sys, options, false};
  AdaptiveDpResult<Sys> result;
  const auto x0 = sys.initial_state();
  result.value = dp.value(x0, sys.prior(), 0, &result.first_q_factors);
  const auto controls = sys.controls(x0, 0);
  for (Index j : detail::near_minimizers(result.first_q_factors)) result.optimal_first_controls.push_back(controls[j]);
  return result;
}

/// Closed-loop decision rule on belief states.
template <ParametricSystem Sys>
using AdaptiveRule = std::function<ControlOf<Sys>(const BeliefState<StateOf<Sys>>&, Index stage)>;

namespace detail {

template <ParametricSystem Sys>
double adaptive_policy_tree(const Sys& sys, const AdaptiveRule<Sys>& rule, const BeliefState<StateOf<Sys>>& state,
                            Index k, Index& nodes, Index guard) {
  if (++nodes > guard) throw GuardExceeded("adaptive policy evaluation exceeded its node guard");
  if (k >= sys.horizon()) return sys.terminal_cost(state.x);
  const auto u = rule(state, k);
  std::map<StateOf<Sys>, double> child_value;
  double total = 0.0;
  for (Index i = 0; i < state.b.size(); ++i) {
    if (state.b.probs[i] == 0.0) continue;
    double inner = 0.0;
    for (const auto& t : sys.transitions(state.x, i, u, k)) {
      if (t.probability == 0.0) continue;
      auto it = child_value.find(t.next);
      if (it == child_value.end()) {
        BeliefState<StateOf<Sys>> child{t.next, belief_transition(state, u, t.next, sys, k)};
        it = child_value.emplace(t.next, adaptive_policy_tree(sys, rule, child, k + 1, nodes, guard)).first;
      }
      inner += t.probability * (t.cost + it->second);
    }
    total += state.b.probs[i] * inner;
  }
  return total;
}

}  // namespace detail

/// Exact Bayesian expected cost of a closed-loop rule from (x_0, b_0).
template <ParametricSystem Sys>
double adaptive_policy_value(const Sys& sys, const AdaptiveRule<Sys>& rule, Index node_guard = 5'000'000) {
  Index nodes = 0;
  return detail::adaptive_policy_tree(sys, rule, {sys.initial_state(), sys.prior()}, 0, nodes, node_guard);
}

}  // namespace seqroll
