#include <gtest/gtest.h>

#include <cmath>

#include "diag_oracle.hpp"
#include "seqroll/random_instances.hpp"
#include "seqroll/rollout.hpp"

using namespace seqroll;

namespace {

BoProblem to_problem(const diag::Instance& inst) {
  BoProblem p;
  const auto m = static_cast<Eigen::Index>(inst.mean.size());
  p.prior.mean = Vector::Map(inst.mean.data(), m);
  p.prior.covariance = Vector::Map(inst.var.data(), m).asDiagonal();
  p.model = ObservationModel::direct(inst.mean.size(), inst.noise, inst.cost);
  p.costs.terminal = inst.trace_terminal ? TerminalKind::trace_covariance : TerminalKind::min_posterior_mean;
  p.horizon = static_cast<Index>(inst.horizon);
  p.grid = NoiseGrid{inst.points, inst.probs};
  return p;
}

diag::Instance random_diag(Rng& rng, int m, int horizon) {
  const auto grid = NoiseGrid::gauss_hermite(3);
  diag::Instance inst;
  for (int u = 0; u < m; ++u) {
    inst.mean.push_back(rng.normal());
    inst.var.push_back(0.2 + rng.uniform());
    inst.noise.push_back(0.1 + rng.uniform());
    inst.cost.push_back(0.2 * rng.uniform());
  }
  inst.points = grid.points;
  inst.probs = grid.probs;
  inst.horizon = horizon;
  return inst;
}

RolloutConfig exact_cfg() { return RolloutConfig{}; }

}  // namespace

TEST(QFactor, LastStageTraceTerminal) {
  // At stage N-1 the Q-factor is c(u) + tr(posterior covariance), which
  // does not depend on z.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomBoOptions opts;
    opts.terminals = {TerminalKind::trace_covariance};
    auto p = random_bo_problem(seed, opts);
    const Index last = p.horizon - 1;
    for (Index u = 0; u < p.model.size(); ++u) {
      const Vector& a = p.model.directions[u];
      const Vector sa = p.prior.covariance * a;
      const double s = a.dot(sa) + p.model.noise_variances[u];
      const double trace_post = p.prior.covariance.trace() - (s > 0 ? sa.squaredNorm() / s : 0.0);
      EXPECT_NEAR(q_factor(p.prior, p, BasePolicy{}, u, last, exact_cfg()).value, p.model.costs[u] + trace_post, 1e-10);
    }
  }
}

TEST(QFactor, ZeroCostsAndZeroTerminalGiveZero) {
  auto p = random_bo_problem(5);
  p.costs.terminal = TerminalKind::zero;
  p.model.costs.assign(p.model.size(), 0.0);
  for (Index u = 0; u < p.model.size(); ++u) EXPECT_DOUBLE_EQ(q_factor(p.prior, p, BasePolicy{}, u, 0, exact_cfg()).value, 0.0);
}

TEST(QFactor, MatchesScalarReference) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_diag(rng, 2 + trial % 3, 1 + trial % 3);
    const auto p = to_problem(inst);
    const auto s0 = diag::initial(inst);
    for (int u = 0; u < static_cast<int>(inst.mean.size()); ++u)
      EXPECT_NEAR(q_factor(p.prior, p, BasePolicy{}, static_cast<Index>(u), 0, exact_cfg()).value,
                  diag::q_value(inst, s0, 0, u, false), 1e-10);
  }
}

TEST(QFactor, RejectsBadStageAndCandidate) {
  const auto p = random_bo_problem(1);
  EXPECT_THROW(q_factor(p.prior, p, BasePolicy{}, 0, p.horizon, exact_cfg()), InvalidArgument);
  EXPECT_THROW(q_factor(p.prior, p, BasePolicy{}, p.model.size(), 0, exact_cfg()), InvalidArgument);
}

TEST(SelectRollout, HandBuiltChoice) {
  // Component 1 has a slightly higher mean but far more variance; observing
  // it first is worth more than greedy's pick of component 0.
  diag::Instance inst{{0.0, 0.1}, {0.01, 4.0}, {0.5, 0.5}, {0.05, 0.05}, {-1.0, 1.0}, {0.5, 0.5}, 2, false};
  const auto p = to_problem(inst);
  const auto s0 = diag::initial(inst);
  const double q0 = diag::q_value(inst, s0, 0, 0, false);
  const double q1 = diag::q_value(inst, s0, 0, 1, false);
  ASSERT_LT(q1, q0);
  const auto decision = select_rollout(p.prior, p, BasePolicy{}, 0, exact_cfg());
  EXPECT_EQ(decision.choice, 1u);
  EXPECT_NEAR(decision.estimates[0].value, q0, 1e-12);
  EXPECT_NEAR(decision.estimates[1].value, q1, 1e-12);
  EXPECT_EQ(BasePolicy{}.choose(p.prior, p.model), 0u);

  RolloutConfig pruned;
  pruned.prune_limit = 1;
  const auto only_base = select_rollout(p.prior, p, BasePolicy{}, 0, pruned);
  EXPECT_EQ(only_base.choice, 0u);
  EXPECT_EQ(only_base.estimates.size(), 1u);
}

TEST(SelectRollout, SymmetricInstanceTiesToLowestIndex) {
  diag::Instance inst{{0.5, 0.5, 0.5}, {1.0, 1.0, 1.0}, {0.3, 0.3, 0.3}, {0.1, 0.1, 0.1}, {-1.0, 1.0}, {0.5, 0.5}, 2, false};
  const auto p = to_problem(inst);
  EXPECT_EQ(select_rollout(p.prior, p, BasePolicy{}, 0, exact_cfg()).choice, 0u);
}

TEST(SelectRollout, NoWorseThanBaseAtEveryStage) {
  // Policy improvement at the decision: min_u Q(u) <= Q(base choice) = J_base.
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto p = random_bo_problem(seed);
    for (auto acq : {AcquisitionKind::greedy(), AcquisitionKind::expected_improvement(), AcquisitionKind::lcb(1.0)}) {
      BasePolicy base{acq};
      const auto d = select_rollout(p.prior, p, base, 0, exact_cfg());
      const double chosen = d.estimates[d.choice].value;
      EXPECT_LE(chosen, base_policy_cost(p.prior, p, base, 0, EvalMode{}) + 1e-12);
    }
  }
}

TEST(SelectRollout, PruningKeepsWinnerWhenItIsInTopK) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomBoOptions opts;
    opts.max_dimension = 4;
    const auto p = random_bo_problem(seed, opts);
    const auto full = select_rollout(p.prior, p, BasePolicy{}, 0, exact_cfg());
    for (Index k = 1; k <= p.model.size(); ++k) {
      RolloutConfig cfg;
      cfg.prune_limit = k;
      const auto pruned = select_rollout(p.prior, p, BasePolicy{}, 0, cfg);
      const auto top = rank_candidates(p.prior, p.model, AcquisitionKind::greedy(), k);
      EXPECT_EQ(pruned.estimates.size(), k);
      if (std::find(top.begin(), top.end(), full.choice) != top.end()) { EXPECT_EQ(pruned.choice, full.choice); }
      const double best = pruned.estimates[0].value;  // base choice is ranked first
      for (const auto& e : pruned.estimates) EXPECT_LE(std::min(best, e.value), best);
    }
  }
}

TEST(SelectRollout, MonteCarloCommonRandomNumbersDeterministic) {
  const auto p = random_bo_problem(21);
  RolloutConfig cfg;
  cfg.mode = EvalKind::monte_carlo;
  cfg.samples_per_candidate = 300;
  cfg.seed = 17;
  const auto a = select_rollout(p.prior, p, BasePolicy{}, 0, cfg);
  const auto b = select_rollout(p.prior, p, BasePolicy{}, 0, cfg);
  ASSERT_EQ(a.estimates.size(), b.estimates.size());
  for (Index i = 0; i < a.estimates.size(); ++i) EXPECT_EQ(a.estimates[i].value, b.estimates[i].value);
  EXPECT_EQ(a.choice, b.choice);
  cfg.common_random_numbers = false;
  const auto c = select_rollout(p.prior, p, BasePolicy{}, 0, cfg);
  EXPECT_EQ(c.estimates.size(), a.estimates.size());
}

TEST(SelectRollout, MonteCarloApproachesExact) {
  auto p = random_bo_problem(31);
  p.horizon = 2;
  RolloutConfig mc;
  mc.mode = EvalKind::monte_carlo;
  mc.samples_per_candidate = 40000;
  const auto exact = select_rollout(p.prior, p, BasePolicy{}, 0, exact_cfg());
  const auto sampled = select_rollout(p.prior, p, BasePolicy{}, 0, mc);
  for (Index i = 0; i < exact.estimates.size(); ++i)
    EXPECT_LT(std::abs(exact.estimates[i].value - sampled.estimates[i].value),
              5.0 * sampled.estimates[i].standard_error + 1e-9);
}

TEST(SelectRollout, CertaintyEquivalentCounts) {
  auto p = random_bo_problem(2);
  p.horizon = 3;
  RolloutConfig ce;
  ce.mode = EvalKind::certainty_equivalent;
  const auto d = select_rollout(p.prior, p, BasePolicy{}, 0, ce);
  EXPECT_EQ(d.stats.q_factor_evaluations, p.model.size());
  EXPECT_EQ(d.stats.first_stage_expansions, p.model.size() * p.grid.size());
  EXPECT_EQ(d.stats.tail_paths, p.model.size() * p.grid.size());
}

TEST(SelectRollout, TruncationZeroUsesTerminalAfterFirstStage) {
  auto p = random_bo_problem(6);
  p.horizon = 3;
  RolloutConfig cfg;
  cfg.truncation_depth = 0;
  auto one_stage = p;
  one_stage.horizon = 1;
  const auto truncated = select_rollout(p.prior, p, BasePolicy{}, 0, cfg);
  const auto short_run = select_rollout(p.prior, one_stage, BasePolicy{}, 0, exact_cfg());
  for (Index i = 0; i < truncated.estimates.size(); ++i)
    EXPECT_NEAR(truncated.estimates[i].value, short_run.estimates[i].value, 1e-12);
}

TEST(SelectRollout, TailValueOverride) {
  const auto p = random_bo_problem(9);
  const TailValue zero = [](const GaussianBelief&, Index) { return 0.0; };
  const auto d = select_rollout(p.prior, p, BasePolicy{}, 0, exact_cfg(), &zero);
  for (Index u = 0; u < p.model.size(); ++u) EXPECT_DOUBLE_EQ(d.estimates[u].value, p.model.costs[u]);
  EXPECT_EQ(d.choice, argmin_lowest(p.model.costs));
}

TEST(Multiagent, EvaluationBudgetAndSingleAgentEquivalence) {
  RandomBoOptions opts;
  opts.min_dimension = 3;
  opts.max_dimension = 3;
  const auto p = random_bo_problem(4, opts);
  const auto two = select_multiagent(p.prior, p, BasePolicy{}, 0, exact_cfg(), 2);
  EXPECT_EQ(two.stats.q_factor_evaluations, 6u);
  EXPECT_EQ(two.choice.size(), 2u);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = random_bo_problem(seed);
    EXPECT_EQ(select_multiagent(q.prior, q, BasePolicy{}, 0, exact_cfg(), 1).choice.front(),
              select_rollout(q.prior, q, BasePolicy{}, 0, exact_cfg()).choice);
  }
  EXPECT_THROW(select_multiagent(p.prior, p, BasePolicy{}, 0, exact_cfg(), 0), InvalidArgument);
}

TEST(Multiagent, NoWorseThanBaseBatch) {
  // Each agent's minimization includes the current assignment, so the final
  // batch's Q-factor never exceeds that of the base batch.
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    RandomBoOptions opts;
    opts.max_horizon = 2;
    const auto p = random_bo_problem(seed, opts);
    const Index agents = 2;
    const auto d = select_multiagent(p.prior, p, BasePolicy{}, 0, exact_cfg(), agents);
    const auto base_batch = BasePolicy{}.choose_batch(p.prior, p.model, agents);
    const auto q_base =
        detail::batch_q_factor(p.prior, p, BasePolicy{}, base_batch, 0, exact_cfg(), agents, nullptr).value;
    const auto q_final = detail::batch_q_factor(p.prior, p, BasePolicy{}, d.choice, 0, exact_cfg(), agents, nullptr).value;
    EXPECT_LE(q_final, q_base + 1e-12);
    EXPECT_NEAR(q_base, base_policy_cost_estimate(p.prior, p, BasePolicy{}, 0, EvalMode{}, kNoTruncation, agents).value,
                1e-12);
  }
}

TEST(Episode, DeterministicPerSeed) {
  const auto p = random_bo_problem(3);
  const Vector truth = p.prior.mean;
  for (auto controller : {Controller::base, Controller::rollout}) {
    const auto a = run_episode(p, BasePolicy{}, exact_cfg(), controller, truth, 99);
    const auto b = run_episode(p, BasePolicy{}, exact_cfg(), controller, truth, 99);
    EXPECT_EQ(a.realized_cost, b.realized_cost);
    ASSERT_EQ(a.steps.size(), p.horizon);
    for (Index k = 0; k < a.steps.size(); ++k) {
      EXPECT_EQ(a.steps[k].observed, b.steps[k].observed);
      EXPECT_EQ(a.steps[k].values, b.steps[k].values);
    }
    EXPECT_NEAR(a.realized_cost, a.observation_cost + a.terminal, 1e-15);
  }
}

TEST(Episode, ZeroNoiseCollapsesToTruth) {
  BoProblem p;
  p.prior = GaussianBelief(Vector::Zero(3), Matrix::Identity(3, 3));
  p.model = ObservationModel::direct(3, 0.0, 0.1);
  p.horizon = 3;
  p.costs.terminal = TerminalKind::trace_covariance;
  Vector truth(3);
  truth << 1.5, -2.0, 0.25;
  BasePolicy base{AcquisitionKind::max_variance()};
  const auto traj = run_episode(p, base, exact_cfg(), Controller::base, truth, 1);
  const auto& final_belief = traj.final_belief();
  EXPECT_LT((final_belief.mean - truth).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(final_belief.covariance.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(traj.best_point, 1u);
  EXPECT_NEAR(traj.realized_cost, 0.3, 1e-12);
}

TEST(Episode, MultiagentObservesBatchEachStage) {
  const auto p = random_bo_problem(8);
  const auto traj = run_episode(p, BasePolicy{}, exact_cfg(), Controller::multiagent, p.prior.mean, 4, 2);
  for (const auto& step : traj.steps) EXPECT_EQ(step.observed.size(), 2u);
  EXPECT_THROW(run_episode(p, BasePolicy{}, exact_cfg(), Controller::base, Vector::Zero(7), 1), InvalidArgument);
}
