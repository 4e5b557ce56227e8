#pragma once

// Adaptive control of x_{k+1} = f_k(x_k, theta, u_k, w_k) with theta drawn
// from a finite hypothesis list theta^0..theta^{n-1}.
//
// A system exposes, for every (state, hypothesis, control, stage), the finite
// list of disturbance outcomes as Transition records: next state, outcome
// probability and stage cost g_k. A system is deterministic when every such
// list has exactly one entry.

#include <concepts>
#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "seqroll/beliefs.hpp"
#include "seqroll/policies.hpp"

namespace seqroll {

template <class State>
struct Transition {
  State next;
  double probability = 1.0;
  double cost = 0.0;
};

template <class S>
concept ParametricSystem = requires(const S& sys, const typename S::State& x, const typename S::Control& u, Index k,
                                    Index i) {
  { sys.horizon() } -> std::convertible_to<Index>;
  { sys.hypothesis_count() } -> std::convertible_to<Index>;
  { sys.prior() } -> std::convertible_to<DiscreteBelief>;
  { sys.initial_state() } -> std::convertible_to<typename S::State>;
  { sys.controls(x, k) } -> std::convertible_to<std::vector<typename S::Control>>;
  { sys.transitions(x, i, u, k) } -> std::convertible_to<std::vector<Transition<typename S::State>>>;
  { sys.terminal_cost(x) } -> std::convertible_to<double>;
  requires std::totally_ordered<typename S::State>;
  requires std::equality_comparable<typename S::Control>;
};

template <ParametricSystem Sys>
using StateOf = typename Sys::State;
template <ParametricSystem Sys>
using ControlOf = typename Sys::Control;

/// Base policy pi^i: control at (hypothesis i, state x, stage k).
template <ParametricSystem Sys>
using AdaptivePolicy = std::function<ControlOf<Sys>(Index, const StateOf<Sys>&, Index)>;

template <class State>
struct BeliefState {
  State x;
  DiscreteBelief b;
};

template <ParametricSystem Sys>
bool is_deterministic_at(const Sys& sys, const StateOf<Sys>& x, Index i, const ControlOf<Sys>& u, Index k) {
  return sys.transitions(x, i, u, k).size() == 1;
}

/// P(x_next | x, theta^i, u) for every hypothesis.
template <ParametricSystem Sys>
std::vector<double> transition_likelihoods(const Sys& sys, const StateOf<Sys>& x, const ControlOf<Sys>& u,
                                           const StateOf<Sys>& x_next, Index k) {
  std::vector<double> likelihood(sys.hypothesis_count(), 0.0);
  for (Index i = 0; i < likelihood.size(); ++i)
    for (const auto& t : sys.transitions(x, i, u, k))
      if (t.next == x_next) likelihood[i] += t.probability;
  return likelihood;
}

/// b_{k+1} = B_k(x_k, b_k, u_k, x_{k+1}) by Bayes' rule.
template <ParametricSystem Sys>
DiscreteBelief belief_transition(const BeliefState<StateOf<Sys>>& state, const ControlOf<Sys>& u,
                                 const StateOf<Sys>& x_next, const Sys& sys, Index k) {
  try {
    return discrete_update(state.b, transition_likelihoods(sys, state.x, u, x_next, k));
  } catch (const Contradiction&) {
    throw Contradiction("next state is impossible under every hypothesis");
  }
}

/// Optimal cost-to-go J^i_k(x) of the perfect-information problem with
/// theta = theta^i, evaluated lazily and memoized. Not thread-safe.
template <ParametricSystem Sys>
class PerParameterOptimal {
 public:
  explicit PerParameterOptimal(const Sys& sys, Index node_guard = 1'000'000) : sys_(&sys), guard_(node_guard) {}

  double value(Index i, Index k, const StateOf<Sys>& x) const {
    if (k >= sys_->horizon()) return sys_->terminal_cost(x);
    const auto key = std::make_tuple(i, k, x);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= guard_) throw GuardExceeded("per-parameter DP exceeded its state budget");
    double best = std::numeric_limits<double>::infinity();
    const auto controls = sys_->controls(x, k);
    if (controls.empty()) throw InvalidArgument("empty control set at a reachable state");
    for (const auto& u : controls) best = std::min(best, q_value(i, k, x, u));
    memo_.emplace(key, best);
    return best;
  }

  double q_value(Index i, Index k, const StateOf<Sys>& x, const ControlOf<Sys>& u) const {
    double q = 0.0;
    for (const auto& t : sys_->transitions(x, i, u, k)) q += t.probability * (t.cost + value(i, k + 1, t.next));
    return q;
  }

  /// Lowest-order optimal control of the known-theta^i problem.
  ControlOf<Sys> best_control(Index i, Index k, const StateOf<Sys>& x) const {
    const auto controls = sys_->controls(x, k);
    std::vector<double> q;
    for (const auto& u : controls) q.push_back(q_value(i, k, x, u));
    return controls[argmin_lowest(q)];
  }

 private:
  const Sys* sys_;
  Index guard_;
  mutable std::map<std::tuple<Index, Index, StateOf<Sys>>, double> memo_;
};

/// Exact cost J^i_{k,pi^i}(x) of a base policy with theta fixed at theta^i.
/// Memoized; not thread-safe.
template <ParametricSystem Sys>
class BasePolicyValue {
 public:
  BasePolicyValue(const Sys& sys, AdaptivePolicy<Sys> policy) : sys_(&sys), policy_(std::move(policy)) {}

  double value(Index i, Index k, const StateOf<Sys>& x) const {
    if (k >= sys_->horizon()) return sys_->terminal_cost(x);
    const auto key = std::make_tuple(i, k, x);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const auto u = policy_(i, x, k);
    double v = 0.0;
    for (const auto& t : sys_->transitions(x, i, u, k)) v += t.probability * (t.cost + value(i, k + 1, t.next));
    memo_.emplace(key, v);
    return v;
  }

  const AdaptivePolicy<Sys>& policy() const { return policy_; }

 private:
  const Sys* sys_;
  AdaptivePolicy<Sys> policy_;
  mutable std::map<std::tuple<Index, Index, StateOf<Sys>>, double> memo_;
};

/// Computes Ĵ^i_k(x) for every state reachable from the initial state under
/// theta^i. Returns the evaluator so further states can be queried.
template <ParametricSystem Sys>
PerParameterOptimal<Sys> per_parameter_optimal(const Sys& sys, Index i, Index node_guard = 1'000'000) {
  if (i >= sys.hypothesis_count()) throw InvalidArgument("per_parameter_optimal: hypothesis out of range");
  PerParameterOptimal<Sys> values(sys, node_guard);
  values.value(i, 0, sys.initial_state());
  return values;
}

/// Uses hypothesis `shared`'s values for every i (one J^i for all i).
template <class Values>
struct SharedParameterValues {
  const Values& values;
  Index shared = 0;

  template <class State>
  double value(Index, Index k, const State& x) const {
    return values.value(shared, k, x);
  }
};

template <ParametricSystem Sys>
struct LookaheadDecision {
  ControlOf<Sys> control;
  std::vector<ControlOf<Sys>> controls;  ///< canonical order
  std::vector<double> q_factors;         ///< belief-averaged, aligned with controls
};

/// One-step lookahead: argmin_u sum_i b^i E_w[ g_k + V^i_{k+1}(f_k) ].
/// `values` supplies V via value(i, k, x).
template <ParametricSystem Sys, class Values>
LookaheadDecision<Sys> lookahead_decision(const BeliefState<StateOf<Sys>>& state, Index k, const Values& values,
                                          const Sys& sys) {
  LookaheadDecision<Sys> d;
  d.controls = sys.controls(state.x, k);
  if (d.controls.empty()) throw InvalidArgument("lookahead_control: empty control set");
  for (const auto& u : d.controls) {
    double q = 0.0;
    for (Index i = 0; i < state.b.size(); ++i) {
      if (state.b.probs[i] == 0.0) continue;
      double qi = 0.0;
      for (const auto& t : sys.transitions(state.x, i, u, k)) qi += t.probability * (t.cost + values.value(i, k + 1, t.next));
      q += state.b.probs[i] * qi;
    }
    d.q_factors.push_back(q);
  }
  d.control = d.controls[argmin_lowest(d.q_factors)];
  return d;
}

template <ParametricSystem Sys, class Values>
ControlOf<Sys> lookahead_control(const BeliefState<StateOf<Sys>>& state, Index k, const Values& values, const Sys& sys) {
  return lookahead_decision(state, k, values, sys).control;
}

/// Q_k(u, theta^i) = g_k + J^i_{k+1,pi^i}(f_k(x, theta^i, u)) by deterministic
/// propagation of the base policy to the horizon.
template <ParametricSystem Sys>
double deterministic_q_factor(const BeliefState<StateOf<Sys>>& state, const ControlOf<Sys>& u, Index i, Index k,
                              const AdaptivePolicy<Sys>& base, const Sys& sys) {
  auto step = [&](const StateOf<Sys>& x, const ControlOf<Sys>& control, Index stage) {
    auto ts = sys.transitions(x, i, control, stage);
    if (ts.size() != 1) throw InvalidArgument("deterministic_q_factor: system is not deterministic");
    return ts.front();
  };
  auto first = step(state.x, u, k);
  double cost = first.cost;
  StateOf<Sys> x = std::move(first.next);
  for (Index stage = k + 1; stage < sys.horizon(); ++stage) {
    auto t = step(x, base(i, x, stage), stage);
    cost += t.cost;
    x = std::move(t.next);
  }
  return cost + sys.terminal_cost(x);
}

struct StochasticConfig {
  EvalKind mode = EvalKind::exact;
  Index samples = 1000;
  std::uint64_t seed = 0;
};

namespace detail {

template <ParametricSystem Sys>
double exact_policy_tail(const Sys& sys, const AdaptivePolicy<Sys>& base, Index i, Index k, const StateOf<Sys>& x) {
  if (k >= sys.horizon()) return sys.terminal_cost(x);
  double v = 0.0;
  for (const auto& t : sys.transitions(x, i, base(i, x, k), k))
    v += t.probability * (t.cost + exact_policy_tail(sys, base, i, k + 1, t.next));
  return v;
}

/// Most probable outcome, lowest index on ties: the deterministic stand-in
/// for future disturbances under certainty equivalence.
template <class State>
const Transition<State>& nominal_outcome(const std::vector<Transition<State>>& ts) {
  Index best = 0;
  for (Index w = 1; w < ts.size(); ++w)
    if (ts[w].probability > ts[best].probability) best = w;
  return ts[best];
}

}  // namespace detail

/// Q_k(u, theta^i, w) = g_k(x, theta^i, u, w) + J^i_{k+1,pi^i}(f_k(x, theta^i, u, w)).
///
/// The tail is evaluated exactly, by Monte Carlo, or with every future
/// disturbance at its most probable outcome (certainty equivalence).
template <ParametricSystem Sys>
double stochastic_q_factor(const BeliefState<StateOf<Sys>>& state, const ControlOf<Sys>& u, Index i, Index w, Index k,
                           const AdaptivePolicy<Sys>& base, const Sys& sys, const StochasticConfig& cfg) {
  if (i >= sys.hypothesis_count()) throw InvalidArgument("stochastic_q_factor: hypothesis out of range");
  const auto ts = sys.transitions(state.x, i, u, k);
  if (w >= ts.size()) throw InvalidArgument("stochastic_q_factor: disturbance outcome out of range");
  const auto& first = ts[w];
  switch (cfg.mode) {
    case EvalKind::exact: return first.cost + detail::exact_policy_tail(sys, base, i, k + 1, first.next);
    case EvalKind::certainty_equivalent: {
      double cost = first.cost;
      StateOf<Sys> x = first.next;
      for (Index stage = k + 1; stage < sys.horizon(); ++stage) {
        const auto next = sys.transitions(x, i, base(i, x, stage), stage);
        const auto& t = detail::nominal_outcome(next);
        cost += t.cost;
        x = t.next;
      }
      return cost + sys.terminal_cost(x);
    }
    case EvalKind::monte_carlo: {
      if (cfg.samples == 0) throw InvalidArgument("stochastic_q_factor: zero samples");
      double total = 0.0;
      for (Index s = 0; s < cfg.samples; ++s) {
        Rng rng(derive_seed(cfg.seed, k, i, w, s));
        double cost = first.cost;
        StateOf<Sys> x = first.next;
        for (Index stage = k + 1; stage < sys.horizon(); ++stage) {
          const auto next = sys.transitions(x, i, base(i, x, stage), stage);
          std::vector<double> probs;
          for (const auto& t : next) probs.push_back(t.probability);
          const auto& t = next[rng.categorical(probs)];
          cost += t.cost;
          x = t.next;
        }
        total += cost + sys.terminal_cost(x);
      }
      return total / static_cast<double>(cfg.samples);
    }
  }
  throw InvalidArgument("unknown evaluation mode");
}

/// Rollout control: argmin_u sum_i b^i sum_w P(w) Q_k(u, theta^i, w).
template <ParametricSystem Sys>
LookaheadDecision<Sys> rollout_decision(const BeliefState<StateOf<Sys>>& state, Index k, const AdaptivePolicy<Sys>& base,
                                        const Sys& sys, const StochasticConfig& cfg = {}) {
  LookaheadDecision<Sys> d;
  d.controls = sys.controls(state.x, k);
  if (d.controls.empty()) throw InvalidArgument("rollout_control: empty control set");
  for (const auto& u : d.controls) {
    double q = 0.0;
    for (Index i = 0; i < state.b.size(); ++i) {
      if (state.b.probs[i] == 0.0) continue;
      const auto ts = sys.transitions(state.x, i, u, k);
      double qi = 0.0;
      for (Index w = 0; w < ts.size(); ++w) qi += ts[w].probability * stochastic_q_factor(state, u, i, w, k, base, sys, cfg);
      q += state.b.probs[i] * qi;
    }
    d.q_factors.push_back(q);
  }
  d.control = d.controls[argmin_lowest(d.q_factors)];
  return d;
}

// -- closed-loop episodes ---------------------------------------------------

enum class AdaptiveController { lookahead, rollout, base };

template <ParametricSystem Sys>
struct AdaptiveTrajectory {
  std::vector<StateOf<Sys>> states;      ///< x_0..x_N
  std::vector<ControlOf<Sys>> controls;  ///< u_0..u_{N-1}
  std::vector<DiscreteBelief> beliefs;   ///< b_0..b_N
  double realized_cost = 0.0;
  /// First stage k with b_k a point mass on the truth.
  std::optional<Index> identified_at;
};

/// Simulates the closed loop with theta = theta^truth; disturbances are
/// sampled from the true hypothesis' outcome law using `seed`.
template <ParametricSystem Sys>
AdaptiveTrajectory<Sys> run_adaptive_episode(const Sys& sys, AdaptiveController controller, Index truth,
                                             std::uint64_t seed, const AdaptivePolicy<Sys>& base,
                                             const StochasticConfig& cfg = {}) {
  if (truth >= sys.hypothesis_count()) throw InvalidArgument("run_adaptive_episode: truth index out of range");
  AdaptiveTrajectory<Sys> traj;
  BeliefState<StateOf<Sys>> state{sys.initial_state(), sys.prior()};
  std::optional<PerParameterOptimal<Sys>> optimal;
  if (controller == AdaptiveController::lookahead) optimal.emplace(sys);
  Rng rng(derive_seed(seed, truth));
  traj.states.push_back(state.x);
  traj.beliefs.push_back(state.b);
  auto note_identification = [&](Index k) {
    if (!traj.identified_at && state.b.concentrated_on() == truth) traj.identified_at = k;
  };
  note_identification(0);
  for (Index k = 0; k < sys.horizon(); ++k) {
    ControlOf<Sys> u;
    switch (controller) {
      case AdaptiveController::lookahead: u = lookahead_control(state, k, *optimal, sys); break;
      case AdaptiveController::rollout: u = rollout_decision(state, k, base, sys, cfg).control; break;
      case AdaptiveController::base: {
        // The base policy of the most likely hypothesis.
        Index likely = 0;
        for (Index i = 1; i < state.b.size(); ++i)
          if (state.b.probs[i] > state.b.probs[likely]) likely = i;
        u = base(likely, state.x, k);
        break;
      }
    }
    const auto ts = sys.transitions(state.x, truth, u, k);
    std::vector<double> probs;
    for (const auto& t : ts) probs.push_back(t.probability);
    const auto& t = ts.size() == 1 ? ts.front() : ts[rng.categorical(probs)];
    traj.realized_cost += t.cost;
    state.b = belief_transition(state, u, t.next, sys, k);
    state.x = t.next;
    traj.controls.push_back(u);
    traj.states.push_back(state.x);
    traj.beliefs.push_back(state.b);
    note_identification(k + 1);
  }
  traj.realized_cost += sys.terminal_cost(state.x);
  return traj;
}

}  // namespace seqroll
