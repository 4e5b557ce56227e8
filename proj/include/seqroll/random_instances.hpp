#pragma once

// Seeded generators for small randomized instances. These feed the property
// tests, the acceptance suite and the `bench` subcommand; every instance is a
// pure function of its seed.

#include <string>
#include <vector>

#include "seqroll/bo_problem.hpp"

namespace seqroll {

struct RandomBoOptions {
  Index min_dimension = 2;
  Index max_dimension = 3;
  Index min_horizon = 1;
  Index max_horizon = 3;
  bool random_directions = false;  ///< general a_u instead of the identity basis
  double max_cost = 0.2;
  double min_noise = 0.1;
  double max_noise = 1.0;
  std::vector<TerminalKind> terminals = {TerminalKind::min_posterior_mean, TerminalKind::trace_covariance};
};

namespace detail {

inline Index uniform_index(Rng& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(rng.next() % (hi - lo + 1));
}

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

}  // namespace detail

/// Random covariance L L' + 0.05 I with standard-normal L.
inline Matrix random_covariance(Rng& rng, Index m) {
  const auto n = static_cast<Eigen::Index>(m);
  Matrix l(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) l(r, c) = rng.normal();
  Matrix cov = l * l.transpose() / static_cast<double>(m) + 0.05 * Matrix::Identity(n, n);
  return 0.5 * (cov + cov.transpose());
}

inline Vector random_vector(Rng& rng, Index m) {
  Vector v(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  return v;
}

inline BoProblem random_bo_problem(std::uint64_t seed, const RandomBoOptions& opts = {}) {
  Rng rng(derive_seed(seed, 0x626f));
  BoProblem p;
  const Index m = detail::uniform_index(rng, opts.min_dimension, opts.max_dimension);
  p.horizon = detail::uniform_index(rng, opts.min_horizon, opts.max_horizon);
  p.prior = GaussianBelief(random_vector(rng, m), random_covariance(rng, m));
  for (Index u = 0; u < m; ++u) {
    Vector a = Vector::Zero(static_cast<Eigen::Index>(m));
    if (opts.random_directions)
      a = random_vector(rng, m);
    else
      a[static_cast<Eigen::Index>(u)] = 1.0;
    p.model.directions.push_back(std::move(a));
    p.model.noise_variances.push_back(detail::uniform_real(rng, opts.min_noise, opts.max_noise));
    p.model.costs.push_back(detail::uniform_real(rng, 0.0, opts.max_cost));
  }
  p.costs.terminal = opts.terminals[detail::uniform_index(rng, 0, opts.terminals.size() - 1)];
  p.validate();
  return p;
}

/// A prior, an observation model and a realized sequence of K observations
/// drawn consistently from a sampled truth. Some channels are noiseless.
struct ObservationSequence {
  GaussianBelief prior;
  ObservationModel model;
  std::vector<Index> indices;
  std::vector<double> values;
};

inline ObservationSequence random_observation_sequence(std::uint64_t seed, Index max_dimension = 5,
                                                       Index max_observations = 6) {
  Rng rng(derive_seed(seed, 0x6f6273));
  ObservationSequence s;
  const Index m = detail::uniform_index(rng, 1, max_dimension);
  s.prior = GaussianBelief(random_vector(rng, m), random_covariance(rng, m));
  const Index channels = detail::uniform_index(rng, 1, max_dimension + 1);
  for (Index u = 0; u < channels; ++u) {
    s.model.directions.push_back(random_vector(rng, m));
    s.model.noise_variances.push_back(rng.uniform() < 0.2 ? 0.0 : detail::uniform_real(rng, 0.05, 2.0));
    s.model.costs.push_back(0.0);
  }
  // The truth comes from the prior so exact observations are consistent.
  const Eigen::LLT<Matrix> chol(s.prior.covariance);
  const Vector theta = s.prior.mean + Matrix(chol.matrixL()) * random_vector(rng, m);
  const Index count = detail::uniform_index(rng, 1, max_observations);
  for (Index k = 0; k < count; ++k) {
    const Index u = detail::uniform_index(rng, 0, channels - 1);
    const double noise = std::sqrt(s.model.noise_variances[u]) * rng.normal();
    s.indices.push_back(u);
    s.values.push_back(s.model.directions[u].dot(theta) + noise);
  }
  return s;
}

}  // namespace seqroll
