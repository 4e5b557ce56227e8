// seqroll: batch runs, decoder benchmarks and oracle cross-checks.
//
// Exit codes: 0 ok, 1 invariant violation, 2 usage or parse error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "commands.hpp"

namespace {

using seqroll::cli::Options;

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Base seed; every random stream derives from it");
  cmd->add_option("--out", o.out, "Write structured JSON results to this file");
  cmd->add_option("--threads", o.threads, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
}

void add_rollout(CLI::App* cmd, Options& o) {
  cmd->add_option("--horizon", o.horizon, "Override the problem horizon");
  cmd->add_option("--samples", o.samples, "Monte Carlo samples per candidate")->check(CLI::PositiveNumber);
  cmd->add_option("--truncate", o.truncate, "Rollout truncation depth (stages of base policy before G)");
  cmd->add_option("--prune", o.prune, "Evaluate only the base policy's top candidates");
  cmd->add_option("--mode", o.mode, "Q-factor evaluation: exact, mc or ce")
      ->check(CLI::IsMember({"exact", "mc", "ce", "monte-carlo", "certainty-equivalent"}));
  cmd->add_option("--agents", o.agents, "Observations per stage (multiagent rollout when > 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--base", o.base, "Base acquisition: greedy, lcb:K, ei, max-variance");
}

void add_decoder(CLI::App* cmd, Options& o) {
  cmd->add_option("--rule", o.rule, "Feedback rule")->check(CLI::IsMember({"wordle", "mastermind"}));
  cmd->add_option("--length", o.length, "Code length (enumerated code space)");
  cmd->add_option("--colors", o.colors, "Symbol count drawn from 0-9A-Z");
  cmd->add_option("--alphabet", o.alphabet, "Explicit symbol set");
  cmd->add_option("--words", o.words, "Newline-delimited candidate list");
  cmd->add_option("--prior", o.prior, "Nonuniform prior: lines of 'CODE WEIGHT'");
  cmd->add_option("--extra-guesses", o.extra, "Admissible guesses beyond the candidates");
  cmd->add_option("--heuristic", o.heuristic, "max-expected-shrink, max-entropy or first-consistent");
  cmd->add_option("--guess-mode", o.guess_mode, "mystery-list or full-list");
  cmd->add_option("--prune", o.prune, "Rollout considers the heuristic's top guesses only");
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw seqroll::Error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rollout-based sequential estimation: Bayesian optimization, adaptive control and decoding"};
  app.require_subcommand(1);
  Options o;

  auto* bo = app.add_subcommand("bo-run", "Closed-loop BO episodes, base vs rollout");
  bo->add_option("--problem", o.problems, "BO problem file")->required()->expected(1);
  bo->add_option("--reps", o.reps, "Replications")->check(CLI::PositiveNumber);
  add_common(bo, o);
  add_rollout(bo, o);

  auto* adaptive = app.add_subcommand("adaptive-run", "Adaptive-control episodes on a finite system");
  adaptive->add_option("--problem", o.problems, "Adaptive problem file")->required()->expected(1);
  adaptive->add_option("--reps", o.reps, "Replications")->check(CLI::PositiveNumber);
  adaptive->add_option("--samples", o.samples, "Monte Carlo samples per disturbance")->check(CLI::PositiveNumber);
  adaptive->add_option("--mode", o.mode, "Q-factor evaluation: exact, mc or ce")
      ->check(CLI::IsMember({"exact", "mc", "ce", "monte-carlo", "certainty-equivalent"}));
  add_common(adaptive, o);

  auto* decode = app.add_subcommand("decode", "Decoder self-play over every truth, base vs rollout");
  add_decoder(decode, o);
  decode->add_option("--truth", o.truth, "Play a single game against this code");
  decode->add_flag("--optimal", o.optimal, "Also compute the exact optimal average");
  add_common(decode, o);

  auto* check = app.add_subcommand("oracle-check", "Cross-check rollout, base and lookahead against exact DP");
  check->add_option("--problem", o.problems, "Instance files or directories of *.json")->required();
  add_common(check, o);
  check->add_option("--horizon", o.horizon, "Override BO horizons");
  check->add_option("--prune", o.prune, "Rollout candidate limit");
  check->add_option("--base", o.base, "Base acquisition for BO instances");

  auto* bench = app.add_subcommand("bench", "Random enumerable BO instances: optimal, base and rollout variants");
  bench->add_option("--reps", o.reps, "Number of random instances")->check(CLI::PositiveNumber);
  add_common(bench, o);
  add_rollout(bench, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  namespace cli = seqroll::cli;
  try {
    if (*check) {
      const auto outcome = cli::oracle_check(o, std::cout);
      write_json(o.out, outcome.report);
      if (outcome.parse_errors) return 2;
      return outcome.violations ? 1 : 0;
    }
    nlohmann::json doc;
    if (*bo) doc = cli::bo_run(o, std::cout);
    if (*adaptive) doc = cli::adaptive_run(o, std::cout);
    if (*decode) doc = cli::decode(o, std::cout);
    if (*bench) doc = cli::bench(o, std::cout);
    write_json(o.out, doc);
    return 0;
  } catch (const cli::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 1;
  } catch (const seqroll::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const seqroll::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const seqroll::Contradiction& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const seqroll::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
