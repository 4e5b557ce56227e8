#include <gtest/gtest.h>

#include <cmath>

#include "diag_oracle.hpp"
#include "seqroll/policies.hpp"
#include "seqroll/random_instances.hpp"

using namespace seqroll;

namespace {

Vector vec(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return v;
}

NoiseGrid two_point() { return NoiseGrid{{-1.0, 1.0}, {0.5, 0.5}}; }

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

diag::Instance random_diag(Rng& rng, int m, int horizon, const NoiseGrid& grid) {
  diag::Instance inst;
  for (int u = 0; u < m; ++u) {
    inst.mean.push_back(rng.normal());
    inst.var.push_back(0.2 + rng.uniform());
    inst.noise.push_back(rng.uniform() < 0.2 ? 0.0 : 0.1 + rng.uniform());
    inst.cost.push_back(0.2 * rng.uniform());
  }
  inst.points = grid.points;
  inst.probs = grid.probs;
  inst.horizon = horizon;
  return inst;
}

}  // namespace

TEST(ExpectedImprovement, ClosedFormValues) {
  // gap 1, sigma 1: Phi(1) + phi(1).
  EXPECT_NEAR(expected_improvement(1.0, 0.0, 1.0), 0.841344746068543 + 0.241970724519143, 1e-12);
  EXPECT_NEAR(expected_improvement(0.0, 0.0, 1.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-14);
  EXPECT_DOUBLE_EQ(expected_improvement(0.5, 1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(expected_improvement(2.0, 1.0, 0.0), 1.0);
}

TEST(ExpectedImprovement, NonnegativeEverywhere) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double v = expected_improvement(3.0 * rng.normal(), 3.0 * rng.normal(), rng.uniform() * 2.0);
    EXPECT_GE(v, 0.0);
  }
}

TEST(Acquisition, LcbWithZeroKappaMatchesGreedy) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = random_bo_problem(seed);
    EXPECT_EQ(select_myopic(p.prior, p.model, AcquisitionKind::lcb(0.0)),
              select_myopic(p.prior, p.model, AcquisitionKind::greedy()));
  }
}

TEST(Acquisition, RankingOrderAndTies) {
  const GaussianBelief b(vec({3, 1, 2}), Matrix::Identity(3, 3));
  const auto model = ObservationModel::direct(3, 1.0);
  EXPECT_EQ(rank_candidates(b, model, AcquisitionKind::greedy(), 2), (std::vector<Index>{1, 2}));
  EXPECT_EQ(rank_candidates(b, model, AcquisitionKind::greedy(), 3), (std::vector<Index>{1, 2, 0}));
  const GaussianBelief flat(vec({0, 0, 0}), Matrix::Identity(3, 3));
  EXPECT_EQ(select_myopic(flat, model, AcquisitionKind::greedy()), 0u);
  EXPECT_EQ(rank_candidates(flat, model, AcquisitionKind::expected_improvement(), 3), (std::vector<Index>{0, 1, 2}));
  EXPECT_THROW(rank_candidates(b, model, AcquisitionKind::greedy(), 0), InvalidArgument);
  EXPECT_THROW(rank_candidates(b, model, AcquisitionKind::greedy(), 4), InvalidArgument);
}

TEST(Acquisition, MaxVarianceSkipsPinnedComponent) {
  const GaussianBelief prior(Vector::Zero(3), Matrix::Identity(3, 3));
  auto model = ObservationModel::direct(3, 0.0);
  const auto post = gaussian_update(prior, model, 0, 0.3);
  EXPECT_NE(select_myopic(post, model, AcquisitionKind::max_variance()), 0u);
  EXPECT_EQ(select_myopic(prior, model, AcquisitionKind::max_variance()), 0u);
}

TEST(Acquisition, LcbPrefersUncertainty) {
  Matrix cov = Matrix::Identity(2, 2);
  cov(1, 1) = 9.0;
  const GaussianBelief b(vec({0.0, 1.0}), cov);
  const auto model = ObservationModel::direct(2, 1.0);
  EXPECT_EQ(select_myopic(b, model, AcquisitionKind::greedy()), 0u);
  EXPECT_EQ(select_myopic(b, model, AcquisitionKind::lcb(1.0)), 1u);
}

TEST(Acquisition, Parsing) {
  EXPECT_EQ(parse_acquisition("greedy"), AcquisitionKind::greedy());
  EXPECT_EQ(parse_acquisition("lcb:2.5"), AcquisitionKind::lcb(2.5));
  EXPECT_EQ(parse_acquisition("lcb"), AcquisitionKind::lcb(1.0));
  EXPECT_EQ(parse_acquisition("ei"), AcquisitionKind::expected_improvement());
  EXPECT_EQ(parse_acquisition("max-variance"), AcquisitionKind::max_variance());
  EXPECT_EQ(parse_acquisition(to_string(AcquisitionKind::lcb(0.1))), AcquisitionKind::lcb(0.1));
  EXPECT_THROW(parse_acquisition("lcb:"), InvalidArgument);
  EXPECT_THROW(parse_acquisition("lcb:-1"), InvalidArgument);
  EXPECT_THROW(parse_acquisition("lcbx"), InvalidArgument);
  EXPECT_THROW(parse_acquisition("thompson"), InvalidArgument);
  EXPECT_EQ(parse_eval_kind("monte-carlo"), EvalKind::monte_carlo);
  EXPECT_THROW(parse_eval_kind("exhaustive"), InvalidArgument);
}

TEST(BasePolicyCost, AtHorizonIsTerminal) {
  const auto p = random_bo_problem(3);
  EXPECT_DOUBLE_EQ(base_policy_cost(p.prior, p, BasePolicy{}, p.horizon, EvalMode{}), terminal_cost(p.prior, p.costs));
  EXPECT_THROW(base_policy_cost(p.prior, p, BasePolicy{}, p.horizon + 1, EvalMode{}), InvalidArgument);
}

TEST(BasePolicyCost, ConstantCostsAndZeroTerminal) {
  auto p = random_bo_problem(4);
  p.horizon = 3;
  p.costs.terminal = TerminalKind::zero;
  p.model.costs.assign(p.model.size(), 1.0);
  for (auto kind : {EvalKind::exact, EvalKind::monte_carlo, EvalKind::certainty_equivalent}) {
    EvalMode mode;
    mode.kind = kind;
    mode.samples = 50;
    EXPECT_NEAR(base_policy_cost(p.prior, p, BasePolicy{}, 0, mode), 3.0, 1e-12);
  }
}

TEST(BasePolicyCost, HandBuiltTwoStageTree) {
  // Prior N(0, I) in 2D, r = 1, c = 0.1, grid {-1, 1}. Greedy observes 0
  // (tie), z = +-sqrt(2). After z = +sqrt(2) it observes 1 and the terminal
  // averages to 0; after z = -sqrt(2) it observes 0 again.
  diag::Instance inst{{0.0, 0.0}, {1.0, 1.0}, {1.0, 1.0}, {0.1, 0.1}, {-1.0, 1.0}, {0.5, 0.5}, 2, false};
  const double low = -std::sqrt(0.5);
  const double spread = 0.5 / std::sqrt(1.5);
  const double minus_branch = 0.5 * ((low - spread) + std::min(0.0, low + spread));
  const double hand = 0.2 + 0.5 * 0.0 + 0.5 * minus_branch;
  EXPECT_NEAR(diag::base_value(inst, diag::initial(inst), 0), hand, 1e-15);
  const auto p = to_problem(inst);
  EXPECT_NEAR(base_policy_cost(p.prior, p, BasePolicy{}, 0, EvalMode{}), hand, 1e-12);
}

TEST(BasePolicyCost, ExactMatchesScalarReference) {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto grid = trial % 2 ? NoiseGrid::gauss_hermite(3) : two_point();
    auto inst = random_diag(rng, 2 + trial % 3, 1 + trial % 3, grid);
    inst.trace_terminal = trial % 4 == 3;
    const auto p = to_problem(inst);
    for (int stage = 0; stage <= inst.horizon; ++stage)
      EXPECT_NEAR(base_policy_cost(p.prior, p, BasePolicy{}, static_cast<Index>(stage), EvalMode{}),
                  diag::base_value(inst, diag::initial(inst), stage), 1e-10)
          << "trial " << trial;
  }
}

TEST(BasePolicyCost, MonteCarloConvergesToExact) {
  auto p = random_bo_problem(12);
  p.horizon = 2;
  const double exact = base_policy_cost(p.prior, p, BasePolicy{}, 0, EvalMode{});
  EvalMode mc{EvalKind::monte_carlo, 100000, 9};
  const auto est = base_policy_cost_estimate(p.prior, p, BasePolicy{}, 0, mc);
  EXPECT_LT(std::abs(est.value - exact), 0.01 * std::max(1.0, std::abs(exact)));
  EXPECT_LT(std::abs(est.value - exact), 5.0 * est.standard_error + 1e-12);
  EXPECT_EQ(est.samples, 100000u);
}

TEST(BasePolicyCost, MonteCarloDeterministicPerSeed) {
  const auto p = random_bo_problem(13);
  EvalMode mc{EvalKind::monte_carlo, 200, 5};
  EXPECT_EQ(base_policy_cost(p.prior, p, BasePolicy{}, 0, mc), base_policy_cost(p.prior, p, BasePolicy{}, 0, mc));
}

TEST(BasePolicyCost, TruncationUsesTerminalAtCutoff) {
  auto p = random_bo_problem(14);
  p.horizon = 3;
  const double one_step = base_policy_cost(p.prior, p, BasePolicy{}, 0, EvalMode{}, 1);
  auto short_problem = p;
  short_problem.horizon = 1;
  EXPECT_NEAR(one_step, base_policy_cost(p.prior, short_problem, BasePolicy{}, 0, EvalMode{}), 1e-12);
  EXPECT_DOUBLE_EQ(base_policy_cost(p.prior, p, BasePolicy{}, 0, EvalMode{}, 0), terminal_cost(p.prior, p.costs));
}

TEST(BasePolicyCost, CertaintyEquivalentExactForOneStage) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = random_bo_problem(seed);
    p.horizon = 1;
    EvalMode ce{EvalKind::certainty_equivalent};
    EXPECT_NEAR(base_policy_cost(p.prior, p, BasePolicy{}, 0, ce), base_policy_cost(p.prior, p, BasePolicy{}, 0, EvalMode{}),
                1e-12);
  }
}

TEST(BasePolicy, BatchCyclesRanking) {
  const GaussianBelief b(vec({3, 1, 2}), Matrix::Identity(3, 3));
  const auto model = ObservationModel::direct(3, 1.0);
  BasePolicy base;
  EXPECT_EQ(base.choose_batch(b, model, 2), (std::vector<Index>{1, 2}));
  EXPECT_EQ(base.choose_batch(b, model, 5), (std::vector<Index>{1, 2, 0, 1, 2}));
  EXPECT_EQ(base.choose_batch(b, model, 1), (std::vector<Index>{1}));
}
