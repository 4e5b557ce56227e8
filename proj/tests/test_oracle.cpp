#include <gtest/gtest.h>

#include <algorithm>

#include "diag_oracle.hpp"
#include "seqroll/oracle.hpp"
#include "seqroll/random_instances.hpp"

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

EnumerableInstance random_instance(std::uint64_t seed, bool general_directions = false) {
  RandomBoOptions opts;
  opts.random_directions = general_directions;
  return {random_bo_problem(seed, opts)};
}

}  // namespace

TEST(ExactDp, ZeroHorizonIsTerminal) {
  auto inst = random_instance(1);
  inst.problem.horizon = 0;
  const auto r = exact_dp_value(inst);
  EXPECT_DOUBLE_EQ(r.value, terminal_cost(inst.problem.prior, inst.problem.costs));
  EXPECT_TRUE(r.optimal_first_actions.empty());
}

TEST(ExactDp, UnitCostsZeroTerminalGiveHorizon) {
  for (Index n = 1; n <= 3; ++n) {
    auto inst = random_instance(n);
    inst.problem.horizon = n;
    inst.problem.model.costs.assign(inst.problem.model.size(), 1.0);
    inst.problem.costs.terminal = TerminalKind::zero;
    EXPECT_NEAR(exact_dp_value(inst).value, static_cast<double>(n), 1e-12);
  }
}

TEST(ExactDp, MatchesScalarReference) {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const auto grid = NoiseGrid::gauss_hermite(3);
    diag::Instance d;
    const int m = 2 + trial % 2;
    for (int u = 0; u < m; ++u) {
      d.mean.push_back(rng.normal());
      d.var.push_back(0.3 + rng.uniform());
      d.noise.push_back(0.1 + rng.uniform());
      d.cost.push_back(0.1 * rng.uniform());
    }
    d.points = grid.points;
    d.probs = grid.probs;
    d.horizon = 1 + trial % 3;
    d.trace_terminal = trial % 3 == 0;
    const EnumerableInstance inst{to_problem(d)};
    const auto r = exact_dp_value(inst);
    EXPECT_NEAR(r.value, diag::optimal_value(d, diag::initial(d), 0), 1e-10) << "trial " << trial;
    for (int u = 0; u < m; ++u) EXPECT_NEAR(r.first_q_factors[u], diag::q_value(d, diag::initial(d), 0, u, true), 1e-10);
  }
}

TEST(ExactDp, BeliefAndInformationFormsAgree) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_instance(seed, seed % 2 == 1);
    const auto a = exact_dp_value(inst);
    const auto b = information_vector_dp_value(inst);
    EXPECT_NEAR(a.value, b.value, 1e-12 * std::max(1.0, std::abs(a.value))) << "seed " << seed;
    EXPECT_EQ(a.optimal_first_actions, b.optimal_first_actions);
  }
}

TEST(ExactDp, BatchConditionMatchesSequentialUpdates) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = random_observation_sequence(seed);
    GaussianBelief seq = s.prior;
    for (Index k = 0; k < s.indices.size(); ++k) seq = gaussian_update(seq, s.model, s.indices[k], s.values[k]);
    const auto batch = batch_condition(s.prior, s.model, InfoVector{s.indices, s.values});
    EXPECT_LT((seq.mean - batch.mean).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((seq.covariance - batch.covariance).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ExactDp, OptimalPolicyAttainsValue) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto inst = random_instance(seed);
    EXPECT_NEAR(policy_value(inst, optimal_policy(inst)), exact_dp_value(inst).value, 1e-10);
  }
}

TEST(ExactDp, LowerBoundsBaseAndRollout) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_instance(seed);
    const double optimal = exact_dp_value(inst).value;
    for (auto acq : {AcquisitionKind::greedy(), AcquisitionKind::expected_improvement()}) {
      const BasePolicy base{acq};
      const double base_cost = policy_value(inst, base_policy_rule(inst.problem, base));
      const double rollout_cost = policy_value(inst, rollout_policy_rule(inst.problem, base, RolloutConfig{}));
      EXPECT_LE(optimal, rollout_cost + 1e-10);
      EXPECT_LE(rollout_cost, base_cost + 1e-10) << "seed " << seed;
      EXPECT_NEAR(base_cost, base_policy_cost(inst.problem.prior, inst.problem, base, 0, EvalMode{}), 1e-10);
    }
  }
}

TEST(ExactDp, ExtraObservationCannotHurt) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    auto inst = random_instance(seed);
    const double before = exact_dp_value(inst).value;
    Rng rng(seed);
    auto& model = inst.problem.model;
    model.directions.push_back(random_vector(rng, inst.problem.dimension()));
    model.noise_variances.push_back(0.5);
    model.costs.push_back(0.05);
    EXPECT_LE(exact_dp_value(inst).value, before + 1e-12);
  }
}

TEST(ExactDp, GuardExceededOnLargeTrees) {
  auto inst = random_instance(2);
  inst.problem.horizon = 8;
  inst.leaf_guard = 1000;
  EXPECT_THROW(exact_dp_value(inst), GuardExceeded);
  EXPECT_THROW(information_vector_dp_value(inst), GuardExceeded);
  EXPECT_THROW(policy_value(inst, base_policy_rule(inst.problem, BasePolicy{})), GuardExceeded);
}

TEST(ExactDp, OracleTailRecoversOptimalFirstAction) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_instance(seed);
    const auto dp = exact_dp_value(inst);
    const TailValue tail = [&inst](const GaussianBelief& b, Index stage) { return exact_value_from(inst, b, stage); };
    const auto d = select_rollout(inst.problem.prior, inst.problem, BasePolicy{}, 0, RolloutConfig{}, &tail);
    EXPECT_NE(std::find(dp.optimal_first_actions.begin(), dp.optimal_first_actions.end(), d.choice),
              dp.optimal_first_actions.end());
    for (Index u = 0; u < d.estimates.size(); ++u) EXPECT_NEAR(d.estimates[u].value, dp.first_q_factors[u], 1e-10);
  }
}

TEST(ExactDp, MultiagentPolicyBetweenOptimalBatchAndBase) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    RandomBoOptions opts;
    opts.max_horizon = 2;
    EnumerableInstance inst{random_bo_problem(seed, opts)};
    const double base = policy_value(inst, base_policy_rule(inst.problem, BasePolicy{}, 2));
    const double multi = policy_value(inst, multiagent_policy_rule(inst.problem, BasePolicy{}, RolloutConfig{}, 2));
    EXPECT_LE(multi, base + 1e-10) << "seed " << seed;
  }
}
