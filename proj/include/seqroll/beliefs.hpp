#pragma once

// Exact Bayesian belief recursions.
//
// A GaussianBelief is the posterior of theta in R^m under a Gaussian prior and
// scalar linear observations z_u = a_u' theta + w_u with w_u ~ N(0, r_u).
// Direct observations of component u are the special case a_u = e_u.
// A DiscreteBelief is a probability vector over a finite hypothesis list.
//
// Observation indices are zero-based throughout the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "seqroll/core.hpp"

namespace seqroll {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kNormalizationTolerance = 1e-12;
inline constexpr double kExactObservationTolerance = 1e-9;
inline constexpr double kDegenerateVarianceTolerance = 1e-13;

struct GaussianBelief {
  Vector mean;
  Matrix covariance;

  GaussianBelief() = default;
  GaussianBelief(Vector m, Matrix c) : mean(std::move(m)), covariance(std::move(c)) {
    if (mean.size() != covariance.rows() || covariance.rows() != covariance.cols())
      throw InvalidArgument("GaussianBelief: mean length and covariance shape disagree");
  }

  static GaussianBelief isotropic(Index m, double mean_value = 0.0, double variance = 1.0) {
    return {Vector::Constant(static_cast<Eigen::Index>(m), mean_value),
            variance * Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m))};
  }

  Index dimension() const { return static_cast<Index>(mean.size()); }

  double min_eigenvalue() const {
    if (covariance.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }

  /// Throws InvalidArgument unless shape, symmetry and PSD invariants hold.
  void validate() const {
    if (mean.size() != covariance.rows() || covariance.rows() != covariance.cols())
      throw InvalidArgument("GaussianBelief: mean length and covariance shape disagree");
    if (!mean.allFinite() || !covariance.allFinite())
      throw InvalidArgument("GaussianBelief: non-finite entries");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance)
      throw InvalidArgument("GaussianBelief: covariance is not symmetric");
    if (min_eigenvalue() < -kPsdTolerance)
      throw InvalidArgument("GaussianBelief: covariance is not positive semidefinite");
  }
};

struct DiscreteBelief {
  std::vector<double> probs;

  static DiscreteBelief uniform(Index n) {
    if (n == 0) throw InvalidArgument("DiscreteBelief: no hypotheses");
    return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
  }

  static DiscreteBelief point_mass(Index n, Index at) {
    if (at >= n) throw InvalidArgument("DiscreteBelief: point mass index out of range");
    std::vector<double> p(n, 0.0);
    p[at] = 1.0;
    return {std::move(p)};
  }

  /// Normalizes arbitrary nonnegative weights.
  static DiscreteBelief from_weights(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("DiscreteBelief: weights must be finite and >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("DiscreteBelief: weights sum to zero");
    for (double& w : weights) w /= total;
    return {std::move(weights)};
  }

  Index size() const { return probs.size(); }

  /// Index of the unique hypothesis with unit mass, or size() if not concentrated.
  Index concentrated_on(double tol = 1e-12) const {
    for (Index i = 0; i < probs.size(); ++i)
      if (probs[i] >= 1.0 - tol) return i;
    return probs.size();
  }

  void validate() const {
    if (probs.empty()) throw InvalidArgument("DiscreteBelief: no hypotheses");
    double total = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw InvalidArgument("DiscreteBelief: negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance)
      throw InvalidArgument("DiscreteBelief: probabilities do not sum to 1");
  }

  bool operator==(const DiscreteBelief&) const = default;
};

/// Observation menu: direction a_u, noise variance r_u and cost c(u) per index.
struct ObservationModel {
  std::vector<Vector> directions;
  std::vector<double> noise_variances;
  std::vector<double> costs;

  /// a_u = e_u for u = 0..m-1, the Bayesian optimization case.
  static ObservationModel direct(Index m, double noise_variance, double cost = 0.0) {
    return direct(m, std::vector<double>(m, noise_variance), std::vector<double>(m, cost));
  }

  static ObservationModel direct(Index m, std::vector<double> variances, std::vector<double> costs) {
    ObservationModel model;
    for (Index u = 0; u < m; ++u) {
      Vector e = Vector::Zero(static_cast<Eigen::Index>(m));
      e[static_cast<Eigen::Index>(u)] = 1.0;
      model.directions.push_back(std::move(e));
    }
    model.noise_variances = std::move(variances);
    model.costs = std::move(costs);
    model.validate(m);
    return model;
  }

  Index size() const { return directions.size(); }

  const Vector& direction(Index u) const {
    if (u >= directions.size()) throw InvalidArgument("observation index " + std::to_string(u) + " out of range");
    return directions[u];
  }

  double cost(Index u) const {
    if (u >= costs.size()) throw InvalidArgument("observation index " + std::to_string(u) + " out of range");
    return costs[u];
  }

  void validate(Index m) const {
    if (directions.empty()) throw InvalidArgument("ObservationModel: no observations");
    if (noise_variances.size() != directions.size() || costs.size() != directions.size())
      throw InvalidArgument("ObservationModel: directions, noise_variances and costs differ in length");
    for (const auto& a : directions)
      if (static_cast<Index>(a.size()) != m || !a.allFinite())
        throw InvalidArgument("ObservationModel: direction dimension does not match belief dimension");
    for (double r : noise_variances)
      if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("ObservationModel: noise variance must be finite and >= 0");
    for (double c : costs)
      if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("ObservationModel: cost must be finite and >= 0");
  }
};

enum class TerminalKind { min_posterior_mean, trace_covariance, entropy_discrete, zero };

inline std::string to_string(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::min_posterior_mean: return "min-posterior-mean";
    case TerminalKind::trace_covariance: return "trace-covariance";
    case TerminalKind::entropy_discrete: return "entropy-discrete";
    case TerminalKind::zero: return "zero";
  }
  return "?";
}

inline TerminalKind parse_terminal_kind(std::string_view text) {
  if (text == "min-posterior-mean") return TerminalKind::min_posterior_mean;
  if (text == "trace-covariance") return TerminalKind::trace_covariance;
  if (text == "entropy-discrete") return TerminalKind::entropy_discrete;
  if (text == "zero") return TerminalKind::zero;
  throw InvalidArgument("unknown terminal cost kind '" + std::string(text) + "'");
}

struct CostSpec {
  TerminalKind terminal = TerminalKind::min_posterior_mean;
};

struct UpdateOptions {
  /// Added to the diagonal when the updated covariance fails the PSD check.
  double jitter = 0.0;
};

struct Predictive {
  double mean;
  double variance;
};

inline void check_dimensions(const GaussianBelief& belief, const ObservationModel& model, Index u) {
  const Vector& a = model.direction(u);
  if (a.size() != belief.mean.size() || belief.covariance.rows() != belief.mean.size())
    throw InvalidArgument("dimension mismatch between belief and observation direction");
}

/// Law of z_u before it is observed: N(a'mu, a'Sigma a + r_u).
inline Predictive gaussian_predictive(const GaussianBelief& belief, const ObservationModel& model, Index u) {
  check_dimensions(belief, model, u);
  const Vector& a = model.direction(u);
  const double signal = a.dot(belief.covariance * a);
  return {a.dot(belief.mean), std::max(0.0, signal) + model.noise_variances[u]};
}

/// Conditions the belief on z = a_u' theta + w_u (rank-one update).
///
/// A zero-variance predictive means the observation is already determined by
/// the belief: a consistent z leaves it unchanged, any other z throws
/// Contradiction.
inline GaussianBelief gaussian_update(const GaussianBelief& belief, const ObservationModel& model, Index u, double z,
                                      const UpdateOptions& options = {}) {
  check_dimensions(belief, model, u);
  if (!std::isfinite(z)) throw InvalidArgument("gaussian_update: non-finite observation");
  const Vector& a = model.direction(u);
  const Vector sigma_a = belief.covariance * a;
  const double predicted = a.dot(belief.mean);
  const double innovation_variance = std::max(0.0, a.dot(sigma_a)) + model.noise_variances[u];

  // Variances at roundoff level relative to the prior scale along a count
  // as zero; dividing by them would only amplify cancellation error.
  const double scale = std::max(1.0, a.squaredNorm() * belief.covariance.diagonal().cwiseAbs().maxCoeff());
  if (innovation_variance <= kDegenerateVarianceTolerance * scale) {
    // A z within a few of the residual standard deviations still agrees.
    const double slack = kExactObservationTolerance * std::max(1.0, std::abs(predicted)) + 8.0 * std::sqrt(innovation_variance);
    if (std::abs(z - predicted) > slack)
      throw Contradiction("contradictory exact observation");
    return belief;
  }

  GaussianBelief post;
  post.mean = belief.mean + sigma_a * ((z - predicted) / innovation_variance);
  post.covariance = belief.covariance - (sigma_a * sigma_a.transpose()) / innovation_variance;
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose());
  if (options.jitter > 0.0 && post.min_eigenvalue() < -kPsdTolerance)
    post.covariance.diagonal().array() += options.jitter;
  return post;
}

/// Bayes' rule over a finite hypothesis list.
inline DiscreteBelief discrete_update(const DiscreteBelief& belief, const std::vector<double>& likelihoods) {
  if (likelihoods.size() != belief.size()) throw InvalidArgument("discrete_update: likelihood vector has wrong length");
  DiscreteBelief post{std::vector<double>(belief.size(), 0.0)};
  double total = 0.0;
  for (Index i = 0; i < belief.size(); ++i) {
    if (!(likelihoods[i] >= 0.0) || !std::isfinite(likelihoods[i]))
      throw InvalidArgument("discrete_update: likelihoods must be finite and >= 0");
    post.probs[i] = belief.probs[i] * likelihoods[i];
    total += post.probs[i];
  }
  if (!(total > 0.0)) throw Contradiction("observation inconsistent with every hypothesis");
  for (double& p : post.probs) p /= total;
  return post;
}

inline Index best_point(const GaussianBelief& belief) {
  if (belief.mean.size() == 0) throw InvalidArgument("best_point: empty belief");
  Index best = 0;
  for (Eigen::Index u = 1; u < belief.mean.size(); ++u)
    if (belief.mean[u] < belief.mean[static_cast<Eigen::Index>(best)]) best = static_cast<Index>(u);
  return best;
}

inline double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

inline double terminal_cost(const GaussianBelief& belief, const CostSpec& spec) {
  switch (spec.terminal) {
    case TerminalKind::min_posterior_mean:
      if (belief.mean.size() == 0) throw InvalidArgument("terminal_cost: empty belief");
      return belief.mean.minCoeff();
    case TerminalKind::trace_covariance: return belief.covariance.trace();
    case TerminalKind::zero: return 0.0;
    case TerminalKind::entropy_discrete: break;
  }
  throw InvalidArgument("terminal_cost: " + to_string(spec.terminal) + " does not apply to a Gaussian belief");
}

inline double terminal_cost(const DiscreteBelief& belief, const CostSpec& spec) {
  switch (spec.terminal) {
    case TerminalKind::entropy_discrete: return entropy(belief.probs);
    case TerminalKind::zero: return 0.0;
    default: break;
  }
  throw InvalidArgument("terminal_cost: " + to_string(spec.terminal) + " does not apply to a discrete belief");
}

}  // namespace seqroll
