#pragma once

// Rollout for the Gaussian belief-state problem: one-step lookahead over
// candidate observations with the base policy's cost-to-go as tail value.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seqroll/policies.hpp"

namespace seqroll {

struct RolloutConfig {
  EvalKind mode = EvalKind::exact;
  Index samples_per_candidate = 1000;
  std::uint64_t seed = 0;
  bool common_random_numbers = true;
  /// Base-policy stages simulated after the candidate stage; none = to horizon.
  std::optional<Index> truncation_depth;
  /// Evaluate only the base acquisition's top-k candidates.
  std::optional<Index> prune_limit;
};

struct QFactorEstimate {
  std::vector<Index> candidate;  ///< one index, or one per agent
  double value = 0.0;
  double standard_error = 0.0;
  Index samples = 1;
  EvalKind mode = EvalKind::exact;
};

/// Replacement tail value J~_{k+1}(b_{k+1}) (e.g. the exact optimal cost).
using TailValue = std::function<double(const GaussianBelief&, Index stage)>;

namespace detail {

inline std::uint64_t candidate_stream(const RolloutConfig& cfg, Index stage, const std::vector<Index>& batch) {
  std::uint64_t s = derive_seed(cfg.seed, stage);
  if (!cfg.common_random_numbers)
    for (Index u : batch) s = derive_seed(s, u + 1);
  return s;
}

/// Q-factor of committing `batch` at `stage`, with `agents` observations per
/// later stage chosen by the base policy.
inline QFactorEstimate batch_q_factor(const GaussianBelief& belief, const BoProblem& problem, const BasePolicy& base,
                                      const std::vector<Index>& batch, Index stage, const RolloutConfig& cfg,
                                      Index agents, EvaluationStats* stats, const TailValue* tail = nullptr) {
  if (stage >= problem.horizon) throw InvalidArgument("q_factor: stage must be before the horizon");
  for (Index u : batch)
    if (u >= problem.model.size()) throw InvalidArgument("q_factor: invalid candidate " + std::to_string(u));
  const Index tail_steps = cfg.truncation_depth ? *cfg.truncation_depth : kNoTruncation;
  QFactorEstimate est;
  est.candidate = batch;
  est.mode = cfg.mode;
  if (stats) ++stats->q_factor_evaluations;
  const double stage_cost = batch_cost(problem.model, batch);

  if (tail || cfg.mode != EvalKind::monte_carlo) {
    double expected = 0.0;
    Index expansions = 0;
    for_each_grid_outcome(belief, problem.model, problem.grid, batch, 0, 1.0, [&](double p, const GaussianBelief& post) {
      ++expansions;
      double tail_value;
      if (tail) {
        tail_value = (*tail)(post, stage + 1);
      } else if (cfg.mode == EvalKind::exact) {
        tail_value = exact_tail(post, problem, base, stage + 1, tail_steps, agents);
      } else {
        tail_value = ce_tail(post, problem, base, stage + 1, tail_steps, agents);
        if (stats) ++stats->tail_paths;
      }
      expected += p * tail_value;
    });
    if (stats) stats->first_stage_expansions += expansions;
    est.value = stage_cost + expected;
    est.samples = expansions;
    return est;
  }

  if (cfg.samples_per_candidate == 0) throw InvalidArgument("q_factor: zero samples");
  const std::uint64_t stream = candidate_stream(cfg, stage, batch);
  std::vector<double> values(cfg.samples_per_candidate);
  for (Index s = 0; s < cfg.samples_per_candidate; ++s) {
    Rng rng(derive_seed(stream, s));
    const GaussianBelief post = apply_sampled(belief, problem, batch, rng);
    values[s] = sampled_tail(post, problem, base, stage + 1, tail_steps, agents, rng);
  }
  if (stats) stats->first_stage_expansions += cfg.samples_per_candidate;
  const CostEstimate summary = summarize(values);
  est.value = stage_cost + summary.value;
  est.standard_error = summary.standard_error;
  est.samples = summary.samples;
  return est;
}

inline std::vector<Index> candidate_set(const GaussianBelief& belief, const BoProblem& problem, const BasePolicy& base,
                                        const RolloutConfig& cfg) {
  const Index n = problem.model.size();
  if (cfg.prune_limit) return rank_candidates(belief, problem.model, base.acquisition, std::min(*cfg.prune_limit, n));
  std::vector<Index> all(n);
  for (Index u = 0; u < n; ++u) all[u] = u;
  return all;
}

inline Index argmin_estimate(const std::vector<QFactorEstimate>& estimates) {
  // Lowest observation index wins ties, independent of evaluation order.
  Index best = 0;
  for (Index i = 1; i < estimates.size(); ++i) {
    const double a = estimates[i].value;
    const double b = estimates[best].value;
    if (strictly_less(a, b) || (!strictly_less(b, a) && estimates[i].candidate < estimates[best].candidate)) best = i;
  }
  return best;
}

}  // namespace detail

/// c(u) + E_z[ J~_{k+1}(B_k(b_k, u, z)) ] with J~ the base policy's cost-to-go.
inline QFactorEstimate q_factor(const GaussianBelief& belief, const BoProblem& problem, const BasePolicy& base,
                                Index candidate, Index stage, const RolloutConfig& cfg,
                                EvaluationStats* stats = nullptr) {
  return detail::batch_q_factor(belief, problem, base, {candidate}, stage, cfg, 1, stats);
}

/// Q-factor with an external tail value; the first-stage grid is enumerated.
inline QFactorEstimate q_factor(const GaussianBelief& belief, const BoProblem& problem, Index candidate, Index stage,
                                const TailValue& tail, EvaluationStats* stats = nullptr) {
  RolloutConfig cfg;
  return detail::batch_q_factor(belief, problem, BasePolicy{}, {candidate}, stage, cfg, 1, stats, &tail);
}

struct RolloutDecision {
  Index choice = 0;
  std::vector<QFactorEstimate> estimates;  ///< in candidate evaluation order
  EvaluationStats stats;
};

inline RolloutDecision select_rollout(const GaussianBelief& belief, const BoProblem& problem, const BasePolicy& base,
                                      Index stage, const RolloutConfig& cfg, const TailValue* tail = nullptr) {
  RolloutDecision decision;
  for (Index u : detail::candidate_set(belief, problem, base, cfg))
    decision.estimates.push_back(detail::batch_q_factor(belief, problem, base, {u}, stage, cfg, 1, &decision.stats, tail));
  decision.choice = decision.estimates[detail::argmin_estimate(decision.estimates)].candidate.front();
  return decision;
}

struct MultiagentDecision {
  std::vector<Index> choice;
  std::vector<QFactorEstimate> estimates;
  EvaluationStats stats;
};

/// One-agent-at-a-time rollout for `agents` simultaneous observations.
///
/// Agent j minimizes over its own index with agents before it fixed at their
/// chosen values and agents after it at the base policy's batch; all
/// observations of the stage are then applied jointly.
inline MultiagentDecision select_multiagent(const GaussianBelief& belief, const BoProblem& problem,
                                            const BasePolicy& base, Index stage, const RolloutConfig& cfg,
                                            Index agents) {
  if (agents == 0) throw InvalidArgument("select_multiagent: agent count must be >= 1");
  MultiagentDecision decision;
  decision.choice = base.choose_batch(belief, problem.model, agents);
  const auto candidates = detail::candidate_set(belief, problem, base, cfg);
  for (Index j = 0; j < agents; ++j) {
    std::vector<QFactorEstimate> local;
    for (Index u : candidates) {
      auto batch = decision.choice;
      batch[j] = u;
      local.push_back(detail::batch_q_factor(belief, problem, base, batch, stage, cfg, agents, &decision.stats));
    }
    // Order by the agent's own index for tie-breaking.
    Index best = 0;
    for (Index i = 1; i < local.size(); ++i) {
      const double a = local[i].value;
      const double b = local[best].value;
      if (strictly_less(a, b) || (!strictly_less(b, a) && candidates[i] < candidates[best])) best = i;
    }
    decision.choice[j] = candidates[best];
    decision.estimates.insert(decision.estimates.end(), local.begin(), local.end());
  }
  return decision;
}

// -- closed-loop episodes ---------------------------------------------------

enum class Controller { base, rollout, multiagent };

struct EpisodeStep {
  std::vector<Index> observed;
  std::vector<double> values;
  GaussianBelief belief;  ///< after this stage's observations
};

struct Trajectory {
  GaussianBelief initial;
  std::vector<EpisodeStep> steps;
  double observation_cost = 0.0;
  double terminal = 0.0;
  double realized_cost = 0.0;
  Index best_point = 0;

  const GaussianBelief& final_belief() const { return steps.empty() ? initial : steps.back().belief; }
};

/// Simulates the closed loop against a fixed true theta.
///
/// Observations are z = a_u' theta + sqrt(r_u) * xi with xi drawn from the
/// problem's noise law using `seed`.
inline Trajectory run_episode(const BoProblem& problem, const BasePolicy& base, const RolloutConfig& cfg,
                              Controller controller, const Vector& truth, std::uint64_t seed, Index agents = 1) {
  if (problem.horizon < 1) throw InvalidArgument("run_episode: horizon must be >= 1");
  if (static_cast<Index>(truth.size()) != problem.dimension())
    throw InvalidArgument("run_episode: truth dimension does not match the model");
  Trajectory traj;
  traj.initial = problem.prior;
  GaussianBelief belief = problem.prior;
  Rng rng(derive_seed(seed, 0xe915ULL));
  for (Index stage = 0; stage < problem.horizon; ++stage) {
    RolloutConfig stage_cfg = cfg;
    stage_cfg.seed = derive_seed(cfg.seed, seed);
    std::vector<Index> batch;
    switch (controller) {
      case Controller::base: batch = base.choose_batch(belief, problem.model, agents); break;
      case Controller::rollout: batch = {select_rollout(belief, problem, base, stage, stage_cfg).choice}; break;
      case Controller::multiagent: batch = select_multiagent(belief, problem, base, stage, stage_cfg, agents).choice; break;
    }
    EpisodeStep step;
    for (Index u : batch) {
      const double xi = sample_standardized(rng, problem.grid, problem.law);
      const double z = problem.model.direction(u).dot(truth) + std::sqrt(problem.model.noise_variances[u]) * xi;
      belief = gaussian_update(belief, problem.model, u, z);
      traj.observation_cost += problem.model.cost(u);
      step.observed.push_back(u);
      step.values.push_back(z);
    }
    step.belief = belief;
    traj.steps.push_back(std::move(step));
  }
  traj.terminal = terminal_cost(belief, problem.costs);
  traj.realized_cost = traj.observation_cost + traj.terminal;
  traj.best_point = best_point(belief);
  return traj;
}

}  // namespace seqroll
