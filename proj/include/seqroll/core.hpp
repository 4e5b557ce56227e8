#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqroll {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad dimensions, indices or configuration values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An observation that no admissible belief can explain.
class Contradiction : public Error {
 public:
  using Error::Error;
};

/// An exact enumeration would exceed its node budget.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

/// Malformed input text; `where` names the line, offset or field.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

using Index = std::size_t;

/// Values closer than this (relative to their magnitude) count as ties and
/// are resolved by lowest index.
inline constexpr double kTieTolerance = 1e-12;

inline bool strictly_less(double a, double b) {
  return a < b - kTieTolerance * std::max(1.0, std::abs(b));
}

inline bool nearly_equal(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

/// Argmin with lowest-index tie-break under kTieTolerance.
template <class Range>
Index argmin_lowest(const Range& values) {
  Index best = 0;
  bool first = true;
  Index i = 0;
  for (double v : values) {
    if (first || strictly_less(v, values[best])) {
      best = i;
      first = false;
    }
    ++i;
  }
  if (first) throw InvalidArgument("argmin of an empty range");
  return best;
}

// -- deterministic random numbers ------------------------------------------

/// SplitMix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return mix64(seed); }

template <class... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t next, Rest... rest) {
  return derive_seed(mix64(seed) ^ mix64(next + 0x632be59bd9b4e019ULL), rest...);
}

/// xoshiro256** generator with library-independent uniform and normal
/// draws, so sampled trajectories are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s = mix64(s);
      word = s;
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cached pair).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  /// Index drawn from a discrete law given by `probs` (sums to 1).
  Index categorical(const std::vector<double>& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (Index i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace seqroll
