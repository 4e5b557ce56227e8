#pragma once

// Text formats: belief snapshots and Bayesian-optimization problem files.
//
// Belief snapshots are JSON objects with numbers printed to 17 significant
// digits so they round-trip exactly:
//   {"mean": [0, 1.5], "covariance": [[1, 0], [0, 0.5]]}
//   {"probs": [0.25, 0.75]}
//
// BO problem file:
//   {
//     "kind": "bo",
//     "horizon": 2,
//     "prior": {"mean": [...], "covariance": [[...], ...]},
//     "observations": {
//       "directions": "identity" | [[...], ...],
//       "noise_variances": 0.5 | [...],
//       "costs": 0 | [...]
//     },
//     "terminal": "min-posterior-mean" | "trace-covariance" | "zero",
//     "noise_grid": 3,              // odd Gauss-Hermite size
//     "noise_law": "grid" | "gaussian",
//     "truth": [...]                // optional fixed theta for episodes
//   }

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "seqroll/bo_problem.hpp"
#include "seqroll/finite_system.hpp"

namespace seqroll {

inline std::string format_real(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void append_vector(std::string& out, const Vector& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_real(v[i]);
  }
  out += ']';
}

}  // namespace detail

inline std::string to_text(const GaussianBelief& belief) {
  std::string out = "{\"mean\": ";
  detail::append_vector(out, belief.mean);
  out += ", \"covariance\": [";
  for (Eigen::Index r = 0; r < belief.covariance.rows(); ++r) {
    if (r) out += ", ";
    detail::append_vector(out, belief.covariance.row(r).transpose());
  }
  out += "]}";
  return out;
}

inline std::string to_text(const DiscreteBelief& belief) {
  std::string out = "{\"probs\": [";
  for (Index i = 0; i < belief.probs.size(); ++i) {
    if (i) out += ", ";
    out += format_real(belief.probs[i]);
  }
  out += "]}";
  return out;
}

namespace detail {

inline nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Convert the byte offset to a line number for the diagnostic.
    Index line = 1;
    for (Index i = 0; i < std::min<Index>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(source + ":" + std::to_string(line), e.what());
  }
}

inline Vector json_vector(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Index i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(where + "[" + std::to_string(i) + "]", "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Matrix json_matrix(const nlohmann::json& j, Index cols, const std::string& where) {
  if (!j.is_array()) throw ParseError(where, "expected an array of rows");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (Index r = 0; r < j.size(); ++r) {
    const Vector row = json_vector(j[r], where + "[" + std::to_string(r) + "]");
    if (static_cast<Index>(row.size()) != cols) throw ParseError(where + "[" + std::to_string(r) + "]", "row has wrong length");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

inline std::vector<double> json_reals(const nlohmann::json& j, Index n, const std::string& where) {
  if (j.is_number()) return std::vector<double>(n, j.get<double>());
  const Vector v = json_vector(j, where);
  if (static_cast<Index>(v.size()) != n) throw ParseError(where, "expected " + std::to_string(n) + " entries");
  return {v.data(), v.data() + v.size()};
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline GaussianBelief gaussian_from_json(const nlohmann::json& j, const std::string& where = "$") {
  if (!j.is_object() || !j.contains("mean") || !j.contains("covariance"))
    throw ParseError(where, "expected fields 'mean' and 'covariance'");
  Vector mean = detail::json_vector(j.at("mean"), where + ".mean");
  Matrix cov = detail::json_matrix(j.at("covariance"), static_cast<Index>(mean.size()), where + ".covariance");
  if (cov.rows() != mean.size()) throw ParseError(where + ".covariance", "covariance must be square and match the mean");
  GaussianBelief b(std::move(mean), std::move(cov));
  try {
    b.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(where, e.what());
  }
  return b;
}

inline GaussianBelief gaussian_from_text(const std::string& text) {
  return gaussian_from_json(detail::parse_json(text, "belief"));
}

inline DiscreteBelief discrete_from_text(const std::string& text) {
  const auto j = detail::parse_json(text, "belief");
  if (!j.is_object() || !j.contains("probs")) throw ParseError("$", "expected field 'probs'");
  const Vector p = detail::json_vector(j.at("probs"), "$.probs");
  DiscreteBelief b{{p.data(), p.data() + p.size()}};
  try {
    b.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError("$.probs", e.what());
  }
  return b;
}

struct BoProblemFile {
  BoProblem problem;
  std::optional<Vector> truth;
};

inline BoProblemFile bo_problem_from_json(const nlohmann::json& j) {
  using detail::field;
  if (!j.is_object()) throw ParseError("$", "problem definition must be an object");
  if (j.contains("kind") && j.at("kind") != "bo") throw ParseError("$.kind", "expected \"bo\"");
  BoProblemFile file;
  BoProblem& p = file.problem;
  p.horizon = field<Index>(j, "horizon", "$");
  if (!j.contains("prior")) throw ParseError("$", "missing field 'prior'");
  p.prior = gaussian_from_json(j.at("prior"), "$.prior");
  const Index m = p.prior.dimension();

  const nlohmann::json obs = j.contains("observations") ? j.at("observations") : nlohmann::json::object();
  const nlohmann::json dirs = obs.contains("directions") ? obs.at("directions") : nlohmann::json("identity");
  if (dirs.is_string()) {
    if (dirs != "identity") throw ParseError("$.observations.directions", "expected \"identity\" or an array");
    for (Index u = 0; u < m; ++u) {
      Vector e = Vector::Zero(static_cast<Eigen::Index>(m));
      e[static_cast<Eigen::Index>(u)] = 1.0;
      p.model.directions.push_back(std::move(e));
    }
  } else {
    const Matrix a = detail::json_matrix(dirs, m, "$.observations.directions");
    for (Eigen::Index r = 0; r < a.rows(); ++r) p.model.directions.push_back(a.row(r).transpose());
  }
  const Index n = p.model.directions.size();
  p.model.noise_variances =
      detail::json_reals(obs.contains("noise_variances") ? obs.at("noise_variances") : nlohmann::json(1.0), n,
                         "$.observations.noise_variances");
  p.model.costs = detail::json_reals(obs.contains("costs") ? obs.at("costs") : nlohmann::json(0.0), n,
                                     "$.observations.costs");
  try {
    if (j.contains("terminal")) p.costs.terminal = parse_terminal_kind(j.at("terminal").get<std::string>());
    if (j.contains("noise_grid")) p.grid = NoiseGrid::gauss_hermite(j.at("noise_grid").get<Index>());
    if (j.contains("noise_law")) {
      const auto law = j.at("noise_law").get<std::string>();
      if (law == "grid")
        p.law = NoiseLaw::grid;
      else if (law == "gaussian")
        p.law = NoiseLaw::gaussian;
      else
        throw InvalidArgument("noise_law must be \"grid\" or \"gaussian\"");
    }
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError("$", e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("$", e.what());
  }
  if (j.contains("truth")) {
    Vector t = detail::json_vector(j.at("truth"), "$.truth");
    if (static_cast<Index>(t.size()) != m) throw ParseError("$.truth", "truth dimension does not match the prior");
    file.truth = std::move(t);
  }
  return file;
}

/// Problem kinds a definition file may hold.
enum class ProblemKind { bo, adaptive };

inline ProblemKind problem_kind(const nlohmann::json& j) {
  const std::string kind = j.is_object() && j.contains("kind") ? j.at("kind").get<std::string>() : "bo";
  if (kind == "bo") return ProblemKind::bo;
  if (kind == "adaptive") return ProblemKind::adaptive;
  throw ParseError("$.kind", "unknown problem kind '" + kind + "'");
}

inline nlohmann::json load_problem_json(const std::string& path) { return detail::parse_json(detail::read_file(path), path); }

inline BoProblemFile load_bo_problem(const std::string& path) {
  try {
    return bo_problem_from_json(load_problem_json(path));
  } catch (const ParseError& e) {
    if (e.where().starts_with(path)) throw;
    throw ParseError(path + " " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
  }
}

inline FiniteSystem load_finite_system(const std::string& path) {
  try {
    return FiniteSystem::from_json(load_problem_json(path));
  } catch (const ParseError& e) {
    if (e.where().starts_with(path)) throw;
    throw ParseError(path + " " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, e.what());
  }
}

}  // namespace seqroll
