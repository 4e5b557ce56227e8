#pragma once

// Subcommand implementations for the seqroll CLI. Each command writes a
// human-readable table to `out` and returns a JSON document; the caller
// writes the document to --out. Results depend only on inputs, flags and
// seed: replications run on worker threads but land in fixed slots, and
// nothing time-dependent enters the output.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "seqroll/adaptive.hpp"
#include "seqroll/decoder.hpp"
#include "seqroll/finite_system.hpp"
#include "seqroll/oracle.hpp"
#include "seqroll/problem_io.hpp"
#include "seqroll/random_instances.hpp"
#include "seqroll/rollout.hpp"
#include "seqroll/session.hpp"

namespace seqroll::cli {

using nlohmann::json;

/// Raised when a checked invariant fails; maps to exit code 1.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::vector<std::string> problems;
  std::string out;
  std::uint64_t seed = 0;
  Index reps = 1;
  Index threads = 1;
  // RolloutConfig
  std::optional<Index> horizon;
  Index samples = 1000;
  std::optional<Index> truncate;
  std::optional<Index> prune;
  std::string mode = "exact";
  Index agents = 1;
  std::string base = "greedy";
  // decoder
  std::string rule = "mastermind";
  Index length = 0;
  Index colors = 0;
  std::string alphabet;
  std::string words;
  std::string prior;
  std::string extra;
  std::string heuristic = "max-expected-shrink";
  std::string guess_mode = "mystery-list";
  std::string truth;
  bool optimal = false;
};

inline RolloutConfig rollout_config(const Options& o) {
  RolloutConfig cfg;
  cfg.mode = parse_eval_kind(o.mode);
  cfg.samples_per_candidate = o.samples;
  cfg.seed = o.seed;
  cfg.truncation_depth = o.truncate;
  cfg.prune_limit = o.prune;
  return cfg;
}

inline std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

/// Runs body(r) for r in [0, n) on up to `threads` workers.
template <class Body>
void parallel_for(Index n, Index threads, Body body) {
  threads = std::max<Index>(1, std::min(threads, n));
  if (threads == 1) {
    for (Index r = 0; r < n; ++r) body(r);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (Index t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (Index r = t; r < n; r += threads) {
        try {
          body(r);
        } catch (...) {
          errors[r] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json mean_and_stderr(const std::vector<double>& xs) {
  const CostEstimate e = detail::summarize(xs);
  return {{"mean", e.value}, {"stderr", e.standard_error}};
}

inline const std::string& single_problem(const Options& o) {
  if (o.problems.size() != 1) throw InvalidArgument("exactly one --problem file is required");
  return o.problems.front();
}

// -- bo-run -------------------------------------------------------------------

inline json bo_run(const Options& o, std::ostream& out) {
  BoProblemFile file = load_bo_problem(single_problem(o));
  BoProblem& problem = file.problem;
  if (o.horizon) problem.horizon = *o.horizon;
  if (o.reps == 0) throw InvalidArgument("--reps must be >= 1");
  const BasePolicy base{parse_acquisition(o.base)};
  const RolloutConfig cfg = rollout_config(o);
  const Controller improved = o.agents > 1 ? Controller::multiagent : Controller::rollout;
  const std::string improved_name = o.agents > 1 ? "multiagent" : "rollout";

  struct Rep {
    Vector truth;
    Trajectory base, improved;
  };
  std::vector<Rep> reps(o.reps);
  parallel_for(o.reps, o.threads, [&](Index r) {
    Vector truth;
    if (file.truth) {
      truth = *file.truth;
    } else {
      Rng rng(derive_seed(o.seed, 0x7472757468ULL, r));
      const Eigen::LLT<Matrix> chol(problem.prior.covariance + 1e-12 * Matrix::Identity(problem.dimension(), problem.dimension()));
      truth = problem.prior.mean + Matrix(chol.matrixL()) * random_vector(rng, problem.dimension());
    }
    const std::uint64_t episode_seed = derive_seed(o.seed, r);
    reps[r] = {truth, run_episode(problem, base, cfg, Controller::base, truth, episode_seed, o.agents),
               run_episode(problem, base, cfg, improved, truth, episode_seed, o.agents)};
  });

  json result;
  result["command"] = "bo-run";
  result["problem"] = single_problem(o);
  result["config"] = {{"mode", to_string(cfg.mode)}, {"samples", o.samples}, {"seed", o.seed},
                      {"truncate", o.truncate ? json(*o.truncate) : json(nullptr)},
                      {"prune", o.prune ? json(*o.prune) : json(nullptr)}, {"agents", o.agents},
                      {"base", to_string(base.acquisition)}, {"horizon", problem.horizon}, {"reps", o.reps}};
  auto trajectory_json = [](const Trajectory& t) {
    json steps = json::array();
    for (const auto& s : t.steps) steps.push_back({{"observed", s.observed}, {"values", s.values}});
    return json{{"realized_cost", t.realized_cost},
                {"observation_cost", t.observation_cost},
                {"terminal_cost", t.terminal},
                {"best_point", t.best_point},
                {"steps", steps},
                {"final_belief", json::parse(to_text(t.final_belief()))}};
  };
  json rows = json::array();
  std::vector<double> base_costs, improved_costs;
  out << "rep  base_cost      " << improved_name << "_cost   base_u*  " << improved_name << "_u*\n";
  for (Index r = 0; r < o.reps; ++r) {
    const auto& rep = reps[r];
    rows.push_back({{"rep", r}, {"truth", to_json(rep.truth)}, {"base", trajectory_json(rep.base)},
                    {improved_name, trajectory_json(rep.improved)}});
    base_costs.push_back(rep.base.realized_cost);
    improved_costs.push_back(rep.improved.realized_cost);
    char line[160];
    std::snprintf(line, sizeof line, "%-4zu %-14.6f %-16.6f %-8zu %zu\n", r, rep.base.realized_cost,
                  rep.improved.realized_cost, rep.base.best_point, rep.improved.best_point);
    out << line;
  }
  result["replications"] = std::move(rows);
  result["aggregate"] = {{"base", mean_and_stderr(base_costs)}, {improved_name, mean_and_stderr(improved_costs)}};
  out << "mean base " << fmt(result["aggregate"]["base"]["mean"].get<double>()) << " (se "
      << fmt(result["aggregate"]["base"]["stderr"].get<double>()) << "), " << improved_name << " "
      << fmt(result["aggregate"][improved_name]["mean"].get<double>()) << " (se "
      << fmt(result["aggregate"][improved_name]["stderr"].get<double>()) << ")\n";

  if (cfg.mode == EvalKind::exact) {
    const EnumerableInstance inst{problem};
    try {
      const double base_value = policy_value(inst, base_policy_rule(problem, base, o.agents));
      const double improved_value =
          o.agents > 1 ? policy_value(inst, multiagent_policy_rule(problem, base, cfg, o.agents))
                       : policy_value(inst, rollout_policy_rule(problem, base, cfg));
      result["expected_cost"] = {{"base", base_value}, {improved_name, improved_value}};
      out << "exact expected cost: base " << fmt(base_value, 9) << ", " << improved_name << " "
          << fmt(improved_value, 9) << "\n";
    } catch (const GuardExceeded& e) {
      result["expected_cost"] = nullptr;
      out << "exact expected cost skipped: " << e.what() << "\n";
    }
  }
  return result;
}

// -- adaptive-run ---------------------------------------------------------------

inline AdaptiveRule<FiniteSystem> adaptive_base_rule(const FiniteSystem& sys) {
  auto base = sys.base_policy();
  return [base](const BeliefState<Index>& s, Index k) {
    Index likely = 0;
    for (Index i = 1; i < s.b.size(); ++i)
      if (s.b.probs[i] > s.b.probs[likely]) likely = i;
    return base(likely, s.x, k);
  };
}

inline json adaptive_run(const Options& o, std::ostream& out) {
  const FiniteSystem sys = load_finite_system(single_problem(o));
  if (o.reps == 0) throw InvalidArgument("--reps must be >= 1");
  const AdaptivePolicy<FiniteSystem> base = sys.base_policy();
  StochasticConfig cfg;
  cfg.mode = parse_eval_kind(o.mode);
  cfg.samples = o.samples;
  cfg.seed = o.seed;
  const std::vector<std::pair<std::string, AdaptiveController>> controllers = {
      {"base", AdaptiveController::base}, {"rollout", AdaptiveController::rollout}, {"lookahead", AdaptiveController::lookahead}};

  struct Rep {
    Index truth = 0;
    std::vector<AdaptiveTrajectory<FiniteSystem>> runs;
  };
  std::vector<Rep> reps(o.reps);
  const auto prior = sys.prior();
  parallel_for(o.reps, o.threads, [&](Index r) {
    Rng rng(derive_seed(o.seed, 0x7472757468ULL, r));
    reps[r].truth = rng.categorical(prior.probs);
    for (const auto& [name, c] : controllers)
      reps[r].runs.push_back(run_adaptive_episode(sys, c, reps[r].truth, derive_seed(o.seed, r), base, cfg));
  });

  json result;
  result["command"] = "adaptive-run";
  result["problem"] = single_problem(o);
  result["config"] = {{"mode", to_string(cfg.mode)}, {"samples", o.samples}, {"seed", o.seed}, {"reps", o.reps}};
  json rows = json::array();
  std::vector<std::vector<double>> costs(controllers.size());
  out << "rep  truth        base         rollout      lookahead\n";
  for (Index r = 0; r < o.reps; ++r) {
    json row = {{"rep", r}, {"truth", sys.hypothesis_names()[reps[r].truth]}};
    char line[200];
    std::snprintf(line, sizeof line, "%-4zu %-12s", r, sys.hypothesis_names()[reps[r].truth].c_str());
    out << line;
    for (Index c = 0; c < controllers.size(); ++c) {
      const auto& t = reps[r].runs[c];
      json states = json::array(), controls = json::array();
      for (Index x : t.states) states.push_back(sys.state_names()[x]);
      for (Index u : t.controls) controls.push_back(sys.control_names()[u]);
      row[controllers[c].first] = {{"realized_cost", t.realized_cost}, {"states", states}, {"controls", controls},
                                   {"final_belief", json::parse(to_text(t.beliefs.back()))},
                                   {"identified_at", t.identified_at ? json(*t.identified_at) : json(nullptr)}};
      costs[c].push_back(t.realized_cost);
      std::snprintf(line, sizeof line, " %-12.6f", t.realized_cost);
      out << line;
    }
    out << "\n";
    rows.push_back(std::move(row));
  }
  result["replications"] = std::move(rows);
  json agg;
  for (Index c = 0; c < controllers.size(); ++c) agg[controllers[c].first] = mean_and_stderr(costs[c]);
  result["aggregate"] = agg;

  const auto optimal = exact_adaptive_dp(sys);
  const double base_value = adaptive_policy_value(sys, adaptive_base_rule(sys));
  const double rollout_value = adaptive_policy_value<FiniteSystem>(
      sys, [&](const BeliefState<Index>& s, Index k) { return rollout_decision(s, k, base, sys, cfg).control; });
  PerParameterOptimal<FiniteSystem> known(sys);
  const double lookahead_value = adaptive_policy_value<FiniteSystem>(
      sys, [&](const BeliefState<Index>& s, Index k) { return lookahead_control(s, k, known, sys); });
  result["expected_cost"] = {{"optimal", optimal.value}, {"base", base_value}, {"rollout", rollout_value},
                             {"lookahead", lookahead_value}};
  out << "exact expected cost: optimal " << fmt(optimal.value, 9) << ", base " << fmt(base_value, 9) << ", rollout "
      << fmt(rollout_value, 9) << ", lookahead " << fmt(lookahead_value, 9) << "\n";
  return result;
}

// -- decode -------------------------------------------------------------------

inline DecodingProblem decoding_problem(const Options& o) {
  const Rule rule = parse_rule(o.rule);
  DecodingProblem p;
  if (!o.words.empty()) {
    p = DecodingProblem::from_list(rule, read_code_file(o.words), o.alphabet);
  } else {
    if (o.length == 0) throw InvalidArgument("give --words FILE, or --length with --colors or --alphabet");
    std::string alphabet = o.alphabet;
    if (alphabet.empty()) {
      if (o.colors == 0 || o.colors > kDefaultSymbols.size()) throw InvalidArgument("--colors out of range");
      alphabet = std::string(kDefaultSymbols.substr(0, o.colors));
    }
    p = DecodingProblem::all_codes(rule, o.length, alphabet);
  }
  if (!o.extra.empty()) p.extra_guesses = read_code_file(o.extra);
  p.guess_mode = parse_guess_mode(o.guess_mode);
  if (!o.prior.empty()) {
    std::ifstream in(o.prior);
    if (!in) throw ParseError(o.prior, "cannot open file");
    p.prior = read_prior(in, p.candidates, o.prior);
  }
  p.validate();
  return p;
}

/// Guess sequence of the rollout (or base) decoder against one truth.
inline std::vector<Index> self_play(const Decoder& d, Index truth, Heuristic h, std::optional<Index> prune, bool rollout) {
  std::vector<Index> guesses;
  MysteryList list = d.initial_list();
  const Index cap = 2 * d.candidate_count() + d.pool_size();
  while (true) {
    const Index g = rollout ? d.rollout_guess(list, h, prune).guess : d.base_guess(list, h);
    guesses.push_back(g);
    if (g == truth) return guesses;
    if (guesses.size() > cap) throw InvariantViolation("decoder failed to terminate");
    list = d.shrink(list, g, d.feedback(g, truth));
  }
}

inline json decode(const Options& o, std::ostream& out) {
  const DecodingProblem problem = decoding_problem(o);
  const Heuristic h = parse_heuristic(o.heuristic);
  const Decoder decoder(problem);
  json result;
  result["command"] = "decode";
  result["config"] = {{"rule", to_string(problem.rule)}, {"length", problem.length}, {"alphabet", problem.alphabet},
                      {"candidates", problem.candidates.size()}, {"heuristic", to_string(h)},
                      {"prune", o.prune ? json(*o.prune) : json(nullptr)}, {"guess_mode", to_string(problem.guess_mode)}};

  if (!o.truth.empty()) {
    std::string code = o.truth;
    for (char& c : code) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const auto t = decoder.find_guess(code);
    if (!t || *t >= decoder.candidate_count()) throw InvalidArgument("--truth '" + code + "' is not a candidate");
    const auto seq = self_play(decoder, *t, h, o.prune, true);
    json steps = json::array();
    MysteryList list = decoder.initial_list();
    out << "stage guess     feedback   list_size\n";
    for (Index s = 0; s < seq.size(); ++s) {
      const Feedback fb = Feedback::from_code(problem.rule, problem.length, decoder.feedback(seq[s], *t));
      list = decoder.filter(list, seq[s], decoder.feedback(seq[s], *t));
      steps.push_back({{"guess", decoder.code(seq[s])}, {"feedback", fb.to_string()}, {"list_size", list.size()}});
      char line[160];
      std::snprintf(line, sizeof line, "%-5zu %-9s %-10s %zu\n", s, decoder.code(seq[s]).c_str(),
                    fb.to_string().c_str(), list.size());
      out << line;
    }
    result["truth"] = code;
    result["guesses"] = std::move(steps);
    return result;
  }

  const Index n = decoder.candidate_count();
  std::vector<Index> base_counts(n), rollout_counts(n);
  std::vector<std::string> first_guesses(n);
  const Index workers = std::max<Index>(1, std::min(o.threads, n));
  parallel_for(workers, workers, [&](Index w) {
    const Decoder local(problem);  // caches are per worker
    for (Index t = w; t < n; t += workers) {
      base_counts[t] = local.play_out(local.initial_list(), t, h);
      rollout_counts[t] = self_play(local, t, h, o.prune, true).size();
    }
  });
  const auto first = decoder.rollout_guess(decoder.initial_list(), h, o.prune);
  double base_total = 0.0, rollout_total = 0.0;
  Index base_worst = 0, rollout_worst = 0;
  const auto w = decoder.belief_weights(decoder.initial_list());
  json per_truth = json::array();
  for (Index t = 0; t < n; ++t) {
    base_total += w[t] * static_cast<double>(base_counts[t]);
    rollout_total += w[t] * static_cast<double>(rollout_counts[t]);
    base_worst = std::max(base_worst, base_counts[t]);
    rollout_worst = std::max(rollout_worst, rollout_counts[t]);
    per_truth.push_back({{"truth", decoder.code(t)}, {"base", base_counts[t]}, {"rollout", rollout_counts[t]}});
  }
  result["first_guess"] = decoder.code(first.guess);
  result["average_guesses"] = {{"base", base_total}, {"rollout", rollout_total}};
  result["worst_case"] = {{"base", base_worst}, {"rollout", rollout_worst}};
  result["per_truth"] = std::move(per_truth);
  out << "truths " << n << ", first rollout guess " << decoder.code(first.guess) << "\n";
  out << "policy    average    worst\n";
  out << "base      " << fmt(base_total, 6) << "   " << base_worst << "\n";
  out << "rollout   " << fmt(rollout_total, 6) << "   " << rollout_worst << "\n";
  if (o.optimal) {
    const DecodingSystem sys(decoder);
    const double opt = exact_adaptive_dp(sys).value;
    result["average_guesses"]["optimal"] = opt;
    out << "optimal   " << fmt(opt, 6) << "\n";
  }
  return result;
}

// -- oracle-check ---------------------------------------------------------------

inline constexpr double kCheckTolerance = 1e-9;

struct CheckLog {
  json checks = json::array();
  Index failures = 0;

  void record(const std::string& name, bool pass, json detail, std::ostream& out) {
    if (!pass) ++failures;
    out << "  " << (pass ? "PASS " : "FAIL ") << name << "\n";
    detail["check"] = name;
    detail["pass"] = pass;
    checks.push_back(std::move(detail));
  }
};

inline void check_bo_instance(const BoProblem& problem, const Options& o, CheckLog& log, std::ostream& out) {
  const EnumerableInstance inst{problem};
  const BasePolicy base{parse_acquisition(o.base)};
  RolloutConfig cfg = rollout_config(o);
  cfg.mode = EvalKind::exact;
  const DpResult belief_dp = exact_dp_value(inst);
  const DpResult info_dp = information_vector_dp_value(inst);
  const double scale = std::max(1.0, std::abs(belief_dp.value));
  log.record("dp-forms-agree", std::abs(belief_dp.value - info_dp.value) <= 1e-12 * scale,
             {{"belief_dp", belief_dp.value}, {"information_vector_dp", info_dp.value}}, out);

  const double base_value = policy_value(inst, base_policy_rule(problem, base));
  const double rollout_value = policy_value(inst, rollout_policy_rule(problem, base, cfg));
  log.record("rollout-no-worse-than-base", rollout_value <= base_value + kCheckTolerance,
             {{"base", base_value}, {"rollout", rollout_value}}, out);
  log.record("optimal-no-worse-than-rollout", belief_dp.value <= rollout_value + kCheckTolerance,
             {{"optimal", belief_dp.value}, {"rollout", rollout_value}}, out);

  const TailValue tail = [&](const GaussianBelief& b, Index stage) { return exact_value_from(inst, b, stage); };
  const auto decision = select_rollout(problem.prior, problem, base, 0, cfg, &tail);
  const auto& opt = belief_dp.optimal_first_actions;
  log.record("oracle-tail-picks-optimal", std::find(opt.begin(), opt.end(), decision.choice) != opt.end(),
             {{"choice", decision.choice}, {"optimal_actions", opt}}, out);
}

inline void check_adaptive_instance(const FiniteSystem& sys, const Options& o, CheckLog& log, std::ostream& out) {
  StochasticConfig cfg;
  cfg.seed = o.seed;
  const auto iterated = exact_adaptive_dp(sys);
  const auto direct = exact_adaptive_dp_direct(sys);
  const double scale = std::max(1.0, std::abs(iterated.value));
  log.record("dp-forms-agree", std::abs(iterated.value - direct.value) <= 1e-12 * scale,
             {{"iterated", iterated.value}, {"direct", direct.value}}, out);
  const auto base = sys.base_policy();
  const double base_value = adaptive_policy_value(sys, adaptive_base_rule(sys));
  const double rollout_value = adaptive_policy_value<FiniteSystem>(
      sys, [&](const BeliefState<Index>& s, Index k) { return rollout_decision(s, k, base, sys, cfg).control; });
  log.record("rollout-no-worse-than-base", rollout_value <= base_value + kCheckTolerance,
             {{"base", base_value}, {"rollout", rollout_value}}, out);
  log.record("optimal-no-worse-than-rollout", iterated.value <= rollout_value + kCheckTolerance,
             {{"optimal", iterated.value}, {"rollout", rollout_value}}, out);
  PerParameterOptimal<FiniteSystem> known(sys);
  const double lookahead_value = adaptive_policy_value<FiniteSystem>(
      sys, [&](const BeliefState<Index>& s, Index k) { return lookahead_control(s, k, known, sys); });
  log.record("optimal-no-worse-than-lookahead", iterated.value <= lookahead_value + kCheckTolerance,
             {{"optimal", iterated.value}, {"lookahead", lookahead_value}}, out);
}

/// Problem files named directly or found (*.json, sorted) in directories.
inline std::vector<std::string> expand_problem_paths(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : std::filesystem::directory_iterator(p))
        if (e.path().extension() == ".json") found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

struct CheckOutcome {
  json report;
  Index violations = 0;
  Index parse_errors = 0;
};

inline CheckOutcome oracle_check(const Options& o, std::ostream& out) {
  const auto files = expand_problem_paths(o.problems);
  if (files.empty()) throw InvalidArgument("oracle-check needs --problem FILE or a directory of instances");
  CheckOutcome outcome;
  json instances = json::array();
  for (const auto& path : files) {
    out << path << "\n";
    json entry = {{"problem", path}};
    CheckLog log;
    try {
      const json doc = load_problem_json(path);
      if (problem_kind(doc) == ProblemKind::bo) {
        entry["kind"] = "bo";
        BoProblem problem = load_bo_problem(path).problem;
        if (o.horizon) problem.horizon = *o.horizon;
        check_bo_instance(problem, o, log, out);
      } else {
        entry["kind"] = "adaptive";
        check_adaptive_instance(load_finite_system(path), o, log, out);
      }
      entry["checks"] = log.checks;
      entry["status"] = log.failures == 0 ? "pass" : "fail";
      outcome.violations += log.failures;
    } catch (const ParseError& e) {
      out << "  ERROR " << e.what() << "\n";
      entry["status"] = "parse-error";
      entry["error"] = e.what();
      ++outcome.parse_errors;
    } catch (const GuardExceeded& e) {
      out << "  ERROR " << e.what() << "\n";
      entry["status"] = "guard-exceeded";
      entry["error"] = e.what();
      ++outcome.violations;
    } catch (const Error& e) {
      out << "  ERROR " << e.what() << "\n";
      entry["status"] = "error";
      entry["error"] = e.what();
      ++outcome.violations;
    }
    instances.push_back(std::move(entry));
  }
  outcome.report = {{"command", "oracle-check"}, {"instances", std::move(instances)},
                    {"violations", outcome.violations}, {"parse_errors", outcome.parse_errors}};
  out << files.size() << " instance(s), " << outcome.violations << " violation(s), " << outcome.parse_errors
      << " parse error(s)\n";
  return outcome;
}

// -- bench --------------------------------------------------------------------

inline json bench(const Options& o, std::ostream& out) {
  if (o.reps == 0) throw InvalidArgument("--reps must be >= 1");
  const BasePolicy base{parse_acquisition(o.base)};
  struct Row {
    Index dimension = 0, horizon = 0;
    std::string terminal;
    double optimal = 0, base = 0, rollout = 0, ce = 0, mc = 0;
  };
  std::vector<Row> rows(o.reps);
  parallel_for(o.reps, o.threads, [&](Index r) {
    BoProblem p = random_bo_problem(derive_seed(o.seed, r));
    if (o.horizon) p.horizon = *o.horizon;
    const EnumerableInstance inst{p};
    RolloutConfig cfg = rollout_config(o);
    Row& row = rows[r];
    row.dimension = p.dimension();
    row.horizon = p.horizon;
    row.terminal = to_string(p.costs.terminal);
    row.optimal = exact_dp_value(inst).value;
    row.base = policy_value(inst, base_policy_rule(p, base));
    cfg.mode = EvalKind::exact;
    row.rollout = policy_value(inst, rollout_policy_rule(p, base, cfg));
    cfg.mode = EvalKind::certainty_equivalent;
    row.ce = policy_value(inst, rollout_policy_rule(p, base, cfg));
    cfg.mode = EvalKind::monte_carlo;
    cfg.seed = derive_seed(o.seed, r, 0x6d63ULL);
    row.mc = policy_value(inst, rollout_policy_rule(p, base, cfg));
  });
  json result;
  result["command"] = "bench";
  result["config"] = {{"seed", o.seed}, {"reps", o.reps}, {"samples", o.samples}, {"base", to_string(base.acquisition)},
                      {"prune", o.prune ? json(*o.prune) : json(nullptr)},
                      {"truncate", o.truncate ? json(*o.truncate) : json(nullptr)}};
  json list = json::array();
  Index rollout_wins = 0, ce_losses = 0, mc_losses = 0;
  out << "inst m N terminal              optimal     base        rollout     ce          mc\n";
  for (Index r = 0; r < o.reps; ++r) {
    const Row& row = rows[r];
    if (row.rollout <= row.base + kCheckTolerance) ++rollout_wins;
    if (row.ce > row.base + kCheckTolerance) ++ce_losses;
    if (row.mc > row.base + kCheckTolerance) ++mc_losses;
    list.push_back({{"instance", r}, {"dimension", row.dimension}, {"horizon", row.horizon}, {"terminal", row.terminal},
                    {"optimal", row.optimal}, {"base", row.base}, {"rollout", row.rollout}, {"ce_rollout", row.ce},
                    {"mc_rollout", row.mc}});
    char line[200];
    std::snprintf(line, sizeof line, "%-4zu %zu %zu %-20s %-11.6f %-11.6f %-11.6f %-11.6f %-11.6f\n", r, row.dimension,
                  row.horizon, row.terminal.c_str(), row.optimal, row.base, row.rollout, row.ce, row.mc);
    out << line;
  }
  result["instances"] = std::move(list);
  result["summary"] = {{"rollout_no_worse", rollout_wins}, {"ce_worse_than_base", ce_losses},
                       {"mc_worse_than_base", mc_losses}};
  out << "rollout <= base on " << rollout_wins << "/" << o.reps << "; ce worse than base on " << ce_losses
      << "; mc worse than base on " << mc_losses << "\n";
  return result;
}

}  // namespace seqroll::cli
