#pragma once

// Scalar reference model for direct observations under a diagonal prior.
// Observing component u only moves (mean_u, var_u), so expected costs can be
// recomputed with plain arithmetic and no matrices.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace diag {

struct Instance {
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> noise;
  std::vector<double> cost;
  std::vector<double> points;
  std::vector<double> probs;
  int horizon = 1;
  bool trace_terminal = false;
};

struct State {
  std::vector<double> mean;
  std::vector<double> var;
};

inline double terminal(const Instance& inst, const State& s) {
  if (inst.trace_terminal) {
    double t = 0.0;
    for (double v : s.var) t += v;
    return t;
  }
  return *std::min_element(s.mean.begin(), s.mean.end());
}

inline State observe(const Instance& inst, const State& s, int u, double x) {
  State next = s;
  const double total = s.var[u] + inst.noise[u];
  if (total == 0.0) return next;
  next.mean[u] = s.mean[u] + s.var[u] / std::sqrt(total) * x;
  next.var[u] = s.var[u] * inst.noise[u] / total;
  return next;
}

/// Greedy on the posterior mean, lowest index on exact ties.
inline int greedy(const State& s) {
  int best = 0;
  for (int u = 1; u < static_cast<int>(s.mean.size()); ++u)
    if (s.mean[u] < s.mean[best]) best = u;
  return best;
}

double base_value(const Instance& inst, const State& s, int stage);

inline double q_value(const Instance& inst, const State& s, int stage, int u, bool optimal);

inline double optimal_value(const Instance& inst, const State& s, int stage) {
  if (stage >= inst.horizon) return terminal(inst, s);
  double best = std::numeric_limits<double>::infinity();
  for (int u = 0; u < static_cast<int>(s.mean.size()); ++u) best = std::min(best, q_value(inst, s, stage, u, true));
  return best;
}

inline double q_value(const Instance& inst, const State& s, int stage, int u, bool optimal) {
  double expected = 0.0;
  for (std::size_t j = 0; j < inst.points.size(); ++j) {
    const State next = observe(inst, s, u, inst.points[j]);
    expected += inst.probs[j] * (optimal ? optimal_value(inst, next, stage + 1) : base_value(inst, next, stage + 1));
  }
  return inst.cost[u] + expected;
}

inline double base_value(const Instance& inst, const State& s, int stage) {
  if (stage >= inst.horizon) return terminal(inst, s);
  return q_value(inst, s, stage, greedy(s), false);
}

inline State initial(const Instance& inst) { return {inst.mean, inst.var}; }

}  // namespace diag
