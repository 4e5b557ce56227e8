#pragma once

#include <Eigen/Eigenvalues>

#include <string>
#include <vector>

#include "seqroll/beliefs.hpp"

namespace seqroll {

/// Standardized discrete noise law: mean 0, variance 1, symmetric.
///
/// An observation with predictive N(m, s^2) is discretized as m + s * point_j
/// with probability probs[j].
struct NoiseGrid {
  std::vector<double> points;
  std::vector<double> probs;

  Index size() const { return points.size(); }

  /// Gauss-Hermite nodes and weights for the standard normal (Golub-Welsch).
  static NoiseGrid gauss_hermite(Index size = 3) {
    if (size == 0 || size % 2 == 0) throw InvalidArgument("noise grid size must be odd and positive");
    NoiseGrid grid;
    if (size == 1) {
      grid.points = {0.0};
      grid.probs = {1.0};
      return grid;
    }
    const auto n = static_cast<Eigen::Index>(size);
    Matrix jacobi = Matrix::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
      jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
      jacobi(k - 1, k) = jacobi(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi);
    grid.points.resize(size);
    grid.probs.resize(size);
    for (Eigen::Index j = 0; j < n; ++j) {
      grid.points[static_cast<Index>(j)] = solver.eigenvalues()[j];
      const double v = solver.eigenvectors()(0, j);
      grid.probs[static_cast<Index>(j)] = v * v;
    }
    // Enforce exact symmetry so the grid mean is exactly zero.
    for (Index j = 0; j < size / 2; ++j) {
      const Index mirror = size - 1 - j;
      const double p = 0.5 * (grid.points[mirror] - grid.points[j]);
      const double w = 0.5 * (grid.probs[j] + grid.probs[mirror]);
      grid.points[j] = -p;
      grid.points[mirror] = p;
      grid.probs[j] = w;
      grid.probs[mirror] = w;
    }
    grid.points[size / 2] = 0.0;
    double total = 0.0;
    for (double w : grid.probs) total += w;
    for (double& w : grid.probs) w /= total;
    return grid;
  }

  void validate() const {
    if (points.empty() || points.size() != probs.size()) throw InvalidArgument("noise grid must be nonempty");
    double total = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw InvalidArgument("noise grid probabilities must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("noise grid probabilities must sum to 1");
  }
};

/// How sampled (Monte Carlo and episode) noise is drawn.
enum class NoiseLaw {
  grid,      ///< sample the standardized grid points with their probabilities
  gaussian,  ///< sample a standard normal
};

inline std::string to_string(NoiseLaw law) { return law == NoiseLaw::grid ? "grid" : "gaussian"; }

inline double sample_standardized(Rng& rng, const NoiseGrid& grid, NoiseLaw law) {
  if (law == NoiseLaw::gaussian) return rng.normal();
  return grid.points[rng.categorical(grid.probs)];
}

/// A finite-horizon Bayesian optimization / sequential estimation problem.
struct BoProblem {
  GaussianBelief prior;
  ObservationModel model;
  CostSpec costs;
  Index horizon = 1;
  NoiseGrid grid = NoiseGrid::gauss_hermite(3);
  NoiseLaw law = NoiseLaw::grid;

  Index dimension() const { return prior.dimension(); }
  Index observation_count() const { return model.size(); }

  void validate() const {
    prior.validate();
    model.validate(prior.dimension());
    grid.validate();
    terminal_cost(prior, costs);
  }
};

/// Observed value at grid node j for observation u at the given belief.
inline double grid_observation(const GaussianBelief& belief, const ObservationModel& model, Index u,
                               const NoiseGrid& grid, Index j) {
  const Predictive p = gaussian_predictive(belief, model, u);
  return p.mean + std::sqrt(p.variance) * grid.points[j];
}

}  // namespace seqroll
