#pragma once

// Myopic acquisition-function base policies and their cost-to-go.
//
// Sign convention: f is minimized, acquisition values are maximized. A
// candidate's "mean" and "sigma" are those of a_u' theta (for direct
// observations, theta_u and sqrt(Sigma_uu)).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "seqroll/bo_problem.hpp"

namespace seqroll {

struct AcquisitionKind {
  enum class Type { posterior_mean_greedy, lcb, expected_improvement, max_predictive_variance };
  Type type = Type::posterior_mean_greedy;
  double kappa = 0.0;

  static AcquisitionKind greedy() { return {Type::posterior_mean_greedy, 0.0}; }
  static AcquisitionKind lcb(double kappa) { return {Type::lcb, kappa}; }
  static AcquisitionKind expected_improvement() { return {Type::expected_improvement, 0.0}; }
  static AcquisitionKind max_variance() { return {Type::max_predictive_variance, 0.0}; }

  bool operator==(const AcquisitionKind&) const = default;
};

inline std::string to_string(const AcquisitionKind& kind) {
  switch (kind.type) {
    case AcquisitionKind::Type::posterior_mean_greedy: return "greedy";
    case AcquisitionKind::Type::lcb: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "lcb:%.17g", kind.kappa);
      return buf;
    }
    case AcquisitionKind::Type::expected_improvement: return "ei";
    case AcquisitionKind::Type::max_predictive_variance: return "max-variance";
  }
  return "?";
}

/// Grammar: greedy | posterior-mean-greedy | lcb:KAPPA | ei | expected-improvement
///          | max-variance | max-predictive-variance
inline AcquisitionKind parse_acquisition(std::string_view text) {
  if (text == "greedy" || text == "posterior-mean-greedy") return AcquisitionKind::greedy();
  if (text == "ei" || text == "expected-improvement") return AcquisitionKind::expected_improvement();
  if (text == "max-variance" || text == "max-predictive-variance") return AcquisitionKind::max_variance();
  if (text.starts_with("lcb")) {
    double kappa = 1.0;
    if (text.size() > 3) {
      if (text[3] != ':') throw InvalidArgument("malformed acquisition '" + std::string(text) + "'");
      const std::string number(text.substr(4));
      char* end = nullptr;
      kappa = std::strtod(number.c_str(), &end);
      if (number.empty() || end != number.c_str() + number.size())
        throw InvalidArgument("malformed lcb parameter '" + number + "'");
    }
    if (!std::isfinite(kappa) || kappa < 0.0) throw InvalidArgument("lcb kappa must be finite and >= 0");
    return AcquisitionKind::lcb(kappa);
  }
  throw InvalidArgument("unknown acquisition kind '" + std::string(text) + "'");
}

inline double standard_normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846); }
inline double standard_normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

/// Closed-form expected improvement below incumbent f* for N(mean, sigma^2).
inline double expected_improvement(double incumbent, double mean, double sigma) {
  const double gap = incumbent - mean;
  if (!(sigma > 0.0)) return std::max(0.0, gap);
  const double t = gap / sigma;
  return std::max(0.0, gap * standard_normal_cdf(t) + sigma * standard_normal_pdf(t));
}

namespace detail {

inline double signal_mean(const GaussianBelief& belief, const ObservationModel& model, Index u) {
  return model.direction(u).dot(belief.mean);
}

inline double signal_sigma(const GaussianBelief& belief, const ObservationModel& model, Index u) {
  const Vector& a = model.direction(u);
  return std::sqrt(std::max(0.0, a.dot(belief.covariance * a)));
}

}  // namespace detail

inline double acquisition_value(const GaussianBelief& belief, const ObservationModel& model, Index u,
                                const AcquisitionKind& kind) {
  check_dimensions(belief, model, u);
  switch (kind.type) {
    case AcquisitionKind::Type::posterior_mean_greedy: return -detail::signal_mean(belief, model, u);
    case AcquisitionKind::Type::lcb:
      return -(detail::signal_mean(belief, model, u) - kind.kappa * detail::signal_sigma(belief, model, u));
    case AcquisitionKind::Type::expected_improvement: {
      double incumbent = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < model.size(); ++j) incumbent = std::min(incumbent, detail::signal_mean(belief, model, j));
      return expected_improvement(incumbent, detail::signal_mean(belief, model, u), detail::signal_sigma(belief, model, u));
    }
    case AcquisitionKind::Type::max_predictive_variance: {
      const Vector& a = model.direction(u);
      return a.dot(belief.covariance * a);
    }
  }
  throw InvalidArgument("unknown acquisition kind");
}

/// Indices ordered by descending acquisition value, lowest index first on ties.
inline std::vector<Index> rank_candidates(const GaussianBelief& belief, const ObservationModel& model,
                                          const AcquisitionKind& kind, Index limit) {
  const Index n = model.size();
  if (limit < 1 || limit > n) throw InvalidArgument("rank_candidates: limit must be in [1, n_obs]");
  std::vector<double> score(n);
  for (Index u = 0; u < n; ++u) score[u] = acquisition_value(belief, model, u, kind);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return strictly_less(score[b], score[a]); });
  order.resize(limit);
  return order;
}

inline Index select_myopic(const GaussianBelief& belief, const ObservationModel& model, const AcquisitionKind& kind) {
  if (model.size() == 0) throw InvalidArgument("select_myopic: no observations");
  Index best = 0;
  double best_score = acquisition_value(belief, model, 0, kind);
  for (Index u = 1; u < model.size(); ++u) {
    const double s = acquisition_value(belief, model, u, kind);
    if (strictly_less(best_score, s)) {
      best = u;
      best_score = s;
    }
  }
  return best;
}

/// Acquisition-driven base policy mu_{k+1}(b_k).
///
/// For a batch of L simultaneous observations the policy takes the top-L
/// ranked candidates, cycling through the ranking when L exceeds n_obs.
struct BasePolicy {
  AcquisitionKind acquisition = AcquisitionKind::greedy();

  Index choose(const GaussianBelief& belief, const ObservationModel& model) const {
    return select_myopic(belief, model, acquisition);
  }

  std::vector<Index> choose_batch(const GaussianBelief& belief, const ObservationModel& model, Index agents) const {
    if (agents == 1) return {choose(belief, model)};
    const auto ranking = rank_candidates(belief, model, acquisition, model.size());
    std::vector<Index> batch(agents);
    for (Index j = 0; j < agents; ++j) batch[j] = ranking[j % ranking.size()];
    return batch;
  }
};

enum class EvalKind { exact, monte_carlo, certainty_equivalent };

inline std::string to_string(EvalKind kind) {
  switch (kind) {
    case EvalKind::exact: return "exact";
    case EvalKind::monte_carlo: return "mc";
    case EvalKind::certainty_equivalent: return "ce";
  }
  return "?";
}

inline EvalKind parse_eval_kind(std::string_view text) {
  if (text == "exact" || text == "exact-enumeration") return EvalKind::exact;
  if (text == "mc" || text == "monte-carlo") return EvalKind::monte_carlo;
  if (text == "ce" || text == "certainty-equivalent") return EvalKind::certainty_equivalent;
  throw InvalidArgument("unknown evaluation mode '" + std::string(text) + "'");
}

struct EvalMode {
  EvalKind kind = EvalKind::exact;
  Index samples = 1000;
  std::uint64_t seed = 0;
};

inline constexpr Index kNoTruncation = std::numeric_limits<Index>::max();

/// Counters used to check evaluation budgets.
struct EvaluationStats {
  Index q_factor_evaluations = 0;
  Index first_stage_expansions = 0;  ///< posteriors formed for the stochastic first stage
  Index tail_paths = 0;              ///< deterministic certainty-equivalent tail simulations

  EvaluationStats& operator+=(const EvaluationStats& o) {
    q_factor_evaluations += o.q_factor_evaluations;
    first_stage_expansions += o.first_stage_expansions;
    tail_paths += o.tail_paths;
    return *this;
  }
};

struct CostEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  Index samples = 1;
};

namespace detail {

inline double batch_cost(const ObservationModel& model, const std::vector<Index>& batch) {
  double c = 0.0;
  for (Index u : batch) c += model.cost(u);
  return c;
}

/// Calls visit(probability, posterior) for every grid outcome of a batch of
/// simultaneous observations, conditioning on them one after another.
template <class Visit>
void for_each_grid_outcome(const GaussianBelief& belief, const ObservationModel& model, const NoiseGrid& grid,
                           const std::vector<Index>& batch, Index position, double prob, Visit&& visit) {
  if (position == batch.size()) {
    visit(prob, belief);
    return;
  }
  const Index u = batch[position];
  for (Index j = 0; j < grid.size(); ++j) {
    if (grid.probs[j] == 0.0) continue;
    const double z = grid_observation(belief, model, u, grid, j);
    const GaussianBelief post = gaussian_update(belief, model, u, z);
    for_each_grid_outcome(post, model, grid, batch, position + 1, prob * grid.probs[j], visit);
  }
}

/// Applies a batch with predictive-mean observations (certainty equivalence).
inline GaussianBelief apply_nominal(GaussianBelief belief, const ObservationModel& model, const std::vector<Index>& batch) {
  for (Index u : batch) belief = gaussian_update(belief, model, u, gaussian_predictive(belief, model, u).mean);
  return belief;
}

inline GaussianBelief apply_sampled(GaussianBelief belief, const BoProblem& problem, const std::vector<Index>& batch,
                                    Rng& rng) {
  for (Index u : batch) {
    const Predictive p = gaussian_predictive(belief, problem.model, u);
    const double xi = sample_standardized(rng, problem.grid, problem.law);
    belief = gaussian_update(belief, problem.model, u, p.mean + std::sqrt(p.variance) * xi);
  }
  return belief;
}

inline double exact_tail(const GaussianBelief& belief, const BoProblem& problem, const BasePolicy& policy, Index stage,
                         Index steps_left, Index agents) {
  if (stage >= problem.horizon || steps_left == 0) return terminal_cost(belief, problem.costs);
  const auto batch = policy.choose_batch(belief, problem.model, agents);
  double expected = 0.0;
  for_each_grid_outcome(belief, problem.model, problem.grid, batch, 0, 1.0, [&](double p, const GaussianBelief& post) {
    expected += p * exact_tail(post, problem, policy, stage + 1, steps_left - 1, agents);
  });
  return batch_cost(problem.model, batch) + expected;
}

inline double ce_tail(GaussianBelief belief, const BoProblem& problem, const BasePolicy& policy, Index stage,
                      Index steps_left, Index agents) {
  double cost = 0.0;
  for (; stage < problem.horizon && steps_left > 0; ++stage, --steps_left) {
    const auto batch = policy.choose_batch(belief, problem.model, agents);
    cost += batch_cost(problem.model, batch);
    belief = apply_nominal(std::move(belief), problem.model, batch);
  }
  return cost + terminal_cost(belief, problem.costs);
}

inline double sampled_tail(GaussianBelief belief, const BoProblem& problem, const BasePolicy& policy, Index stage,
                           Index steps_left, Index agents, Rng& rng) {
  double cost = 0.0;
  for (; stage < problem.horizon && steps_left > 0; ++stage, --steps_left) {
    const auto batch = policy.choose_batch(belief, problem.model, agents);
    cost += batch_cost(problem.model, batch);
    belief = apply_sampled(std::move(belief), problem, batch, rng);
  }
  return cost + terminal_cost(belief, problem.costs);
}

inline CostEstimate summarize(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double standard_error = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return {mean, standard_error, values.size()};
}

}  // namespace detail

/// Expected cost of following `policy` from `belief` at `start_stage` until
/// the horizon (or for at most `max_steps` stages, then the terminal cost of
/// the truncation-point belief).
///
/// exact: full expansion of the discretized observation tree.
/// monte_carlo: average of sampled trajectories drawn with `mode.seed`.
/// certainty_equivalent: the current stage is expanded on the grid, every
/// later observation takes its predictive mean.
inline CostEstimate base_policy_cost_estimate(const GaussianBelief& belief, const BoProblem& problem,
                                              const BasePolicy& policy, Index start_stage, const EvalMode& mode,
                                              Index max_steps = kNoTruncation, Index agents = 1) {
  if (start_stage > problem.horizon) throw InvalidArgument("base_policy_cost: start stage beyond horizon");
  if (problem.grid.size() == 0) throw InvalidArgument("base_policy_cost: empty noise grid");
  if (start_stage == problem.horizon || max_steps == 0) return {terminal_cost(belief, problem.costs), 0.0, 1};
  switch (mode.kind) {
    case EvalKind::exact:
      return {detail::exact_tail(belief, problem, policy, start_stage, max_steps, agents), 0.0, 1};
    case EvalKind::certainty_equivalent: {
      const auto batch = policy.choose_batch(belief, problem.model, agents);
      double expected = 0.0;
      detail::for_each_grid_outcome(belief, problem.model, problem.grid, batch, 0, 1.0,
                                    [&](double p, const GaussianBelief& post) {
                                      expected += p * detail::ce_tail(post, problem, policy, start_stage + 1,
                                                                      max_steps - 1, agents);
                                    });
      return {detail::batch_cost(problem.model, batch) + expected, 0.0, 1};
    }
    case EvalKind::monte_carlo: {
      if (mode.samples == 0) throw InvalidArgument("base_policy_cost: zero samples");
      std::vector<double> values(mode.samples);
      for (Index s = 0; s < mode.samples; ++s) {
        Rng rng(derive_seed(mode.seed, s));
        values[s] = detail::sampled_tail(belief, problem, policy, start_stage, max_steps, agents, rng);
      }
      return detail::summarize(values);
    }
  }
  throw InvalidArgument("unknown evaluation mode");
}

inline double base_policy_cost(const GaussianBelief& belief, const BoProblem& problem, const BasePolicy& policy,
                               Index start_stage, const EvalMode& mode, Index max_steps = kNoTruncation) {
  return base_policy_cost_estimate(belief, problem, policy, start_stage, mode, max_steps).value;
}

}  // namespace seqroll
