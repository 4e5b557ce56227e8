#pragma once

// Sequential decoding (Wordle / Mastermind style) as a deterministic adaptive
// control problem: the state is the mystery list of codes still consistent
// with all feedback, the control is the next guess.
//
// Feedback rules
//   wordle:     per position G (green, same symbol), Y (yellow) or - (gray).
//               Greens are assigned first and consume their truth symbol;
//               remaining guess positions are then scanned left to right and
//               marked yellow while an unconsumed copy of the symbol remains.
//   mastermind: black = positional matches, white = size of the symbol
//               multiset intersection minus black.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "seqroll/adaptive.hpp"

namespace seqroll {

enum class Rule { wordle, mastermind };

inline std::string to_string(Rule rule) { return rule == Rule::wordle ? "wordle" : "mastermind"; }

inline Rule parse_rule(std::string_view text) {
  if (text == "wordle") return Rule::wordle;
  if (text == "mastermind") return Rule::mastermind;
  throw InvalidArgument("unknown feedback rule '" + std::string(text) + "'");
}

enum class Mark : std::uint8_t { gray = 0, yellow = 1, green = 2 };

using FeedbackCode = std::uint32_t;

struct Feedback {
  Rule rule = Rule::wordle;
  std::vector<Mark> marks;  ///< wordle only
  Index black = 0;          ///< mastermind only
  Index white = 0;

  /// Dense integer identity of the feedback (base-3 marks, or black*(l+1)+white).
  FeedbackCode code(Index length) const {
    if (rule == Rule::mastermind) return static_cast<FeedbackCode>(black * (length + 1) + white);
    FeedbackCode c = 0;
    for (Index p = marks.size(); p-- > 0;) c = c * 3 + static_cast<FeedbackCode>(marks[p]);
    return c;
  }

  static Feedback from_code(Rule rule, Index length, FeedbackCode code) {
    Feedback f;
    f.rule = rule;
    if (rule == Rule::mastermind) {
      f.black = code / (length + 1);
      f.white = code % (length + 1);
      return f;
    }
    for (Index p = 0; p < length; ++p) {
      f.marks.push_back(static_cast<Mark>(code % 3));
      code /= 3;
    }
    return f;
  }

  bool solved(Index length) const {
    if (rule == Rule::mastermind) return black == length;
    return std::all_of(marks.begin(), marks.end(), [](Mark m) { return m == Mark::green; });
  }

  /// "GY-G-" for wordle, "B,W" for mastermind.
  std::string to_string() const {
    if (rule == Rule::mastermind) return std::to_string(black) + "," + std::to_string(white);
    std::string s;
    for (Mark m : marks) s += m == Mark::green ? 'G' : m == Mark::yellow ? 'Y' : '-';
    return s;
  }

  static Feedback parse(Rule rule, Index length, std::string_view text) {
    Feedback f;
    f.rule = rule;
    if (rule == Rule::wordle) {
      if (text.size() != length) throw InvalidArgument("wordle feedback must have one mark per position");
      for (char c : text) {
        switch (std::toupper(static_cast<unsigned char>(c))) {
          case 'G': f.marks.push_back(Mark::green); break;
          case 'Y': f.marks.push_back(Mark::yellow); break;
          case '-': case '.': case 'X': f.marks.push_back(Mark::gray); break;
          default: throw InvalidArgument(std::string("invalid wordle mark '") + c + "'");
        }
      }
      return f;
    }
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw InvalidArgument("mastermind feedback must be 'black,white'");
    auto number = [](std::string_view s) {
      if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw InvalidArgument("mastermind peg counts must be nonnegative integers");
      return static_cast<Index>(std::stoul(std::string(s)));
    };
    f.black = number(text.substr(0, comma));
    f.white = number(text.substr(comma + 1));
    f.validate(length);
    return f;
  }

  void validate(Index length) const {
    if (rule == Rule::mastermind) {
      if (black + white > length) throw InvalidArgument("black + white pegs exceed the code length");
      if (black == length - 1 && white == 1) throw InvalidArgument("feedback (l-1 black, 1 white) is impossible");
    } else if (marks.size() != length) {
      throw InvalidArgument("wordle feedback must have one mark per position");
    }
  }

  bool operator==(const Feedback&) const = default;
};

inline Feedback compute_feedback(std::string_view guess, std::string_view truth, Rule rule) {
  if (guess.size() != truth.size()) throw InvalidArgument("guess and truth differ in length");
  Feedback f;
  f.rule = rule;
  std::array<int, 256> remaining{};
  if (rule == Rule::mastermind) {
    std::array<int, 256> guess_count{};
    for (Index p = 0; p < guess.size(); ++p) {
      if (guess[p] == truth[p]) ++f.black;
      ++remaining[static_cast<unsigned char>(truth[p])];
      ++guess_count[static_cast<unsigned char>(guess[p])];
    }
    Index common = 0;
    for (Index c = 0; c < 256; ++c) common += static_cast<Index>(std::min(remaining[c], guess_count[c]));
    f.white = common - f.black;
    return f;
  }
  f.marks.assign(guess.size(), Mark::gray);
  for (Index p = 0; p < guess.size(); ++p) {
    if (guess[p] == truth[p])
      f.marks[p] = Mark::green;
    else
      ++remaining[static_cast<unsigned char>(truth[p])];
  }
  for (Index p = 0; p < guess.size(); ++p) {
    if (f.marks[p] == Mark::green) continue;
    int& left = remaining[static_cast<unsigned char>(guess[p])];
    if (left > 0) {
      f.marks[p] = Mark::yellow;
      --left;
    }
  }
  return f;
}

enum class GuessMode {
  mystery_list,  ///< guesses restricted to the current mystery list
  full_list,     ///< any code of the guess pool
};

enum class Heuristic { max_expected_shrink, max_entropy, first_consistent };

inline std::string to_string(Heuristic h) {
  switch (h) {
    case Heuristic::max_expected_shrink: return "max-expected-shrink";
    case Heuristic::max_entropy: return "max-entropy";
    case Heuristic::first_consistent: return "first-consistent";
  }
  return "?";
}

inline Heuristic parse_heuristic(std::string_view text) {
  if (text == "max-expected-shrink" || text == "shrink") return Heuristic::max_expected_shrink;
  if (text == "max-entropy" || text == "entropy") return Heuristic::max_entropy;
  if (text == "first-consistent" || text == "first") return Heuristic::first_consistent;
  throw InvalidArgument("unknown heuristic '" + std::string(text) + "'");
}

inline constexpr std::string_view kDefaultSymbols = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

struct DecodingProblem {
  Rule rule = Rule::mastermind;
  Index length = 0;
  std::string alphabet;                 ///< allowed symbols, canonical order
  std::vector<std::string> candidates;  ///< initial mystery list, canonical order
  std::vector<std::string> extra_guesses;  ///< admissible guesses beyond the candidates
  GuessMode guess_mode = GuessMode::mystery_list;
  std::vector<double> prior;            ///< empty = uniform; otherwise one weight per candidate

  /// Every code of `length` symbols over `alphabet`, lexicographic.
  static DecodingProblem all_codes(Rule rule, Index length, std::string alphabet) {
    DecodingProblem p;
    p.rule = rule;
    p.length = length;
    p.alphabet = std::move(alphabet);
    Index total = 1;
    for (Index i = 0; i < length; ++i) {
      total *= p.alphabet.size();
      if (total > 1'000'000) throw InvalidArgument("code space too large to enumerate");
    }
    for (Index n = 0; n < total; ++n) {
      std::string code(length, ' ');
      Index r = n;
      for (Index pos = length; pos-- > 0;) {
        code[pos] = p.alphabet[r % p.alphabet.size()];
        r /= p.alphabet.size();
      }
      p.candidates.push_back(std::move(code));
    }
    p.validate();
    return p;
  }

  static DecodingProblem mastermind(Index length, Index colors) {
    if (colors == 0 || colors > kDefaultSymbols.size()) throw InvalidArgument("color count out of range");
    return all_codes(Rule::mastermind, length, std::string(kDefaultSymbols.substr(0, colors)));
  }

  static DecodingProblem from_list(Rule rule, std::vector<std::string> codes, std::string alphabet = {}) {
    DecodingProblem p;
    p.rule = rule;
    if (codes.empty()) throw InvalidArgument("word list is empty");
    p.length = codes.front().size();
    if (alphabet.empty()) {
      for (const auto& c : codes)
        for (char s : c)
          if (alphabet.find(s) == std::string::npos) alphabet += s;
      std::sort(alphabet.begin(), alphabet.end());
    }
    p.alphabet = std::move(alphabet);
    p.candidates = std::move(codes);
    p.validate();
    return p;
  }

  bool well_formed(std::string_view code) const {
    return code.size() == length &&
           std::all_of(code.begin(), code.end(), [&](char c) { return alphabet.find(c) != std::string::npos; });
  }

  void validate() const {
    if (candidates.empty()) throw InvalidArgument("candidate list is empty");
    if (length == 0) throw InvalidArgument("code length must be positive");
    if (rule == Rule::wordle && length > 12) throw InvalidArgument("wordle codes longer than 12 are not supported");
    for (const auto* list : {&candidates, &extra_guesses})
      for (const auto& c : *list)
        if (!well_formed(c)) throw InvalidArgument("code '" + c + "' is not " + std::to_string(length) + " symbols over the alphabet");
    std::vector<std::string> sorted = candidates;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw InvalidArgument("duplicate candidate code");
    if (!prior.empty()) {
      if (prior.size() != candidates.size()) throw InvalidArgument("prior must give one weight per candidate");
      for (double w : prior)
        if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("prior weights must be positive");
    }
  }
};

/// Reads newline-delimited codes; blank lines and '#' comments are skipped,
/// letters are upper-cased.
inline std::vector<std::string> read_code_list(std::istream& in, const std::string& source = "input") {
  std::vector<std::string> codes;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string code;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) code += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (code.empty()) continue;
    if (!std::all_of(code.begin(), code.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); }))
      throw ParseError(source + ":" + std::to_string(line_no), "code '" + code + "' is not alphanumeric");
    codes.push_back(std::move(code));
  }
  return codes;
}

inline std::vector<std::string> read_code_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  return read_code_list(in, path);
}

/// Reads "CODE WEIGHT" lines and returns weights aligned with `candidates`.
inline std::vector<double> read_prior(std::istream& in, const std::vector<std::string>& candidates,
                                      const std::string& source = "input") {
  std::map<std::string, double> weights;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string code;
    double w = 0.0;
    if (!(fields >> code)) continue;
    if (!(fields >> w)) throw ParseError(source + ":" + std::to_string(line_no), "expected 'CODE WEIGHT'");
    for (char& c : code) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    weights[code] = w;
  }
  std::vector<double> prior;
  for (const auto& c : candidates) {
    auto it = weights.find(c);
    if (it == weights.end()) throw ParseError(source, "no prior weight for candidate '" + c + "'");
    prior.push_back(it->second);
  }
  return prior;
}

/// Candidate indices still consistent with the feedback, in canonical order.
struct MysteryList {
  std::vector<Index> members;

  Index size() const { return members.size(); }
  bool contains(Index c) const { return std::binary_search(members.begin(), members.end(), c); }
  bool operator==(const MysteryList&) const = default;
};

struct GuessScore {
  Index guess = 0;  ///< guess-pool index
  double q = 0.0;   ///< belief-averaged guesses to decode
};

struct RolloutGuess {
  Index guess = 0;
  std::vector<GuessScore> scores;  ///< ascending by q, ties in canonical order
};

/// Precomputed feedback tables and the decoding heuristics over one problem.
///
/// The guess pool is the candidate list followed by the extra guesses, so
/// candidate i is guess i. Base-heuristic choices are cached per mystery
/// list; a Decoder is therefore not safe for concurrent use.
class Decoder {
 public:
  explicit Decoder(DecodingProblem problem) : problem_(std::move(problem)) {
    problem_.validate();
    pool_ = problem_.candidates;
    for (const auto& g : problem_.extra_guesses)
      if (std::find(pool_.begin(), pool_.end(), g) == pool_.end()) pool_.push_back(g);
    const Index n = problem_.candidates.size();
    table_.resize(pool_.size() * n);
    for (Index g = 0; g < pool_.size(); ++g)
      for (Index c = 0; c < n; ++c)
        table_[g * n + c] = compute_feedback(pool_[g], problem_.candidates[c], problem_.rule).code(problem_.length);
    weights_ = problem_.prior.empty() ? std::vector<double>(n, 1.0) : problem_.prior;
    solved_code_ = compute_feedback(pool_[0], pool_[0], problem_.rule).code(problem_.length);
  }

  const DecodingProblem& problem() const { return problem_; }
  Index candidate_count() const { return problem_.candidates.size(); }
  Index pool_size() const { return pool_.size(); }
  const std::string& code(Index guess) const { return pool_.at(guess); }
  FeedbackCode solved_code() const { return solved_code_; }

  std::optional<Index> find_guess(std::string_view code) const {
    auto it = std::find(pool_.begin(), pool_.end(), code);
    if (it == pool_.end()) return std::nullopt;
    return static_cast<Index>(it - pool_.begin());
  }

  FeedbackCode feedback(Index guess, Index candidate) const { return table_[guess * candidate_count() + candidate]; }

  MysteryList initial_list() const {
    MysteryList list;
    for (Index c = 0; c < candidate_count(); ++c) list.members.push_back(c);
    return list;
  }

  /// Posterior weights over the list (uniform unless a prior was given).
  std::vector<double> belief_weights(const MysteryList& list) const {
    double total = 0.0;
    for (Index c : list.members) total += weights_[c];
    std::vector<double> w;
    for (Index c : list.members) w.push_back(weights_[c] / total);
    return w;
  }

  /// Members whose feedback against `guess` equals `fb`; may be empty.
  MysteryList filter(const MysteryList& list, Index guess, FeedbackCode fb) const {
    MysteryList next;
    for (Index c : list.members)
      if (feedback(guess, c) == fb) next.members.push_back(c);
    return next;
  }

  /// filter() that rejects feedback inconsistent with the whole list.
  MysteryList shrink(const MysteryList& list, Index guess, FeedbackCode fb) const {
    MysteryList next = filter(list, guess, fb);
    if (next.members.empty()) throw Contradiction("feedback is inconsistent with every remaining candidate");
    return next;
  }

  /// Shrinks by an arbitrary well-formed guess string.
  MysteryList shrink(const MysteryList& list, std::string_view guess, const Feedback& fb) const {
    if (!problem_.well_formed(guess)) throw InvalidArgument("guess '" + std::string(guess) + "' is malformed");
    fb.validate(problem_.length);
    const FeedbackCode code = fb.code(problem_.length);
    MysteryList next;
    for (Index c : list.members)
      if (compute_feedback(guess, problem_.candidates[c], problem_.rule).code(problem_.length) == code)
        next.members.push_back(c);
    if (next.members.empty()) throw Contradiction("feedback is inconsistent with every remaining candidate");
    return next;
  }

  std::vector<Index> allowed_guesses(const MysteryList& list) const {
    if (problem_.guess_mode == GuessMode::mystery_list) return list.members;
    std::vector<Index> all(pool_.size());
    for (Index g = 0; g < all.size(); ++g) all[g] = g;
    return all;
  }

  /// Heuristic score of a guess; lower is better.
  double score(const MysteryList& list, Index guess, Heuristic h) const {
    if (h == Heuristic::first_consistent) {
      auto it = std::find(list.members.begin(), list.members.end(), guess);
      return it != list.members.end() ? static_cast<double>(it - list.members.begin())
                                      : static_cast<double>(list.size() + guess);
    }
    std::vector<std::pair<FeedbackCode, double>> buckets;
    buckets.reserve(list.size());
    double total = 0.0;
    for (Index c : list.members) {
      buckets.emplace_back(feedback(guess, c), weights_[c]);
      total += weights_[c];
    }
    std::sort(buckets.begin(), buckets.end());
    double value = 0.0;
    for (Index b = 0; b < buckets.size();) {
      double mass = 0.0;
      Index count = 0;
      Index e = b;
      for (; e < buckets.size() && buckets[e].first == buckets[b].first; ++e) {
        mass += buckets[e].second;
        ++count;
      }
      const double p = mass / total;
      if (h == Heuristic::max_expected_shrink)
        value += p * static_cast<double>(count);
      else
        value += p * std::log(p);  // negative entropy
      b = e;
    }
    return value;
  }

  /// Allowed guesses ordered best-first under the heuristic; ties prefer
  /// list members, then canonical order.
  std::vector<Index> rank_guesses(const MysteryList& list, Heuristic h, std::optional<Index> limit = std::nullopt) const {
    auto guesses = allowed_guesses(list);
    std::vector<double> s(guesses.size());
    for (Index j = 0; j < guesses.size(); ++j) s[j] = score(list, guesses[j], h);
    std::vector<Index> order(guesses.size());
    for (Index j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return tie_order_less(list, s, guesses, a, b); });
    std::vector<Index> ranked;
    const Index keep = limit ? std::min(*limit, order.size()) : order.size();
    for (Index j = 0; j < keep; ++j) ranked.push_back(guesses[order[j]]);
    return ranked;
  }

  Index base_guess(const MysteryList& list, Heuristic h) const {
    if (list.members.empty()) throw InvalidArgument("base_guess: empty mystery list");
    if (list.size() == 1) return list.members.front();
    auto& cache = cache_[static_cast<Index>(h)];
    if (auto it = cache.find(list.members); it != cache.end()) return it->second;
    const auto guesses = allowed_guesses(list);
    std::vector<double> s(guesses.size());
    for (Index j = 0; j < guesses.size(); ++j) s[j] = score(list, guesses[j], h);
    Index best = 0;
    for (Index j = 1; j < guesses.size(); ++j)
      if (tie_order_less(list, s, guesses, j, best)) best = j;
    cache.emplace(list.members, guesses[best]);
    return guesses[best];
  }

  /// Guesses the base heuristic needs to decode `truth` starting from `list`.
  Index play_out(MysteryList list, Index truth, Heuristic h) const {
    Index guesses = 0;
    const Index cap = 2 * candidate_count() + pool_size();
    while (true) {
      const Index g = base_guess(list, h);
      ++guesses;
      if (g == truth) return guesses;
      if (guesses > cap) throw Error("base heuristic failed to terminate");
      list = filter(list, g, feedback(g, truth));
    }
  }

  /// Q(u, theta^i): guesses to decode theta^i when u is guessed now and the
  /// base heuristic plays afterwards.
  Index guess_q_factor(const MysteryList& list, Index guess, Index truth, Heuristic h) const {
    if (guess == truth) return 1;
    return 1 + play_out(filter(list, guess, feedback(guess, truth)), truth, h);
  }

  /// Rollout guess: argmin over candidate guesses of the belief-averaged
  /// Q(u, theta^i), optionally restricted to the heuristic's top `prune_limit`.
  RolloutGuess rollout_guess(const MysteryList& list, Heuristic h, std::optional<Index> prune_limit = std::nullopt) const {
    if (list.members.empty()) throw InvalidArgument("rollout_guess: empty mystery list");
    RolloutGuess result;
    const auto candidates = prune_limit ? rank_guesses(list, h, *prune_limit) : allowed_guesses(list);
    const auto w = belief_weights(list);
    for (Index u : candidates) {
      double q = 0.0;
      for (Index j = 0; j < list.size(); ++j) q += w[j] * static_cast<double>(guess_q_factor(list, u, list.members[j], h));
      result.scores.push_back({u, q});
    }
    std::stable_sort(result.scores.begin(), result.scores.end(), [&](const GuessScore& a, const GuessScore& b) {
      if (strictly_less(a.q, b.q)) return true;
      if (strictly_less(b.q, a.q)) return false;
      const bool ia = list.contains(a.guess), ib = list.contains(b.guess);
      if (ia != ib) return ia;
      return a.guess < b.guess;
    });
    result.guess = result.scores.front().guess;
    return result;
  }

 private:
  bool tie_order_less(const MysteryList& list, const std::vector<double>& s, const std::vector<Index>& guesses, Index a,
                      Index b) const {
    if (strictly_less(s[a], s[b])) return true;
    if (strictly_less(s[b], s[a])) return false;
    const bool ia = list.contains(guesses[a]), ib = list.contains(guesses[b]);
    if (ia != ib) return ia;
    return guesses[a] < guesses[b];
  }

  DecodingProblem problem_;
  std::vector<std::string> pool_;
  std::vector<FeedbackCode> table_;
  std::vector<double> weights_;
  FeedbackCode solved_code_ = 0;
  mutable std::array<std::map<std::vector<Index>, Index>, 3> cache_;
};

// -- adaptive-control view ---------------------------------------------------

struct DecodeState {
  std::vector<Index> list;
  bool solved = false;
  auto operator<=>(const DecodeState&) const = default;
};

/// The decoding puzzle as a deterministic ParametricSystem: hypothesis i is
/// candidate i, each unsolved stage costs one guess, a solved state absorbs
/// at zero cost. Unsolved terminal states are charged their list size.
class DecodingSystem {
 public:
  using State = DecodeState;
  using Control = Index;
  static constexpr Index kPass = static_cast<Index>(-1);

  explicit DecodingSystem(const Decoder& decoder, std::optional<Index> horizon = std::nullopt)
      : decoder_(&decoder), horizon_(horizon.value_or(decoder.candidate_count())) {}

  Index horizon() const { return horizon_; }
  Index hypothesis_count() const { return decoder_->candidate_count(); }
  DiscreteBelief prior() const { return DiscreteBelief::from_weights(decoder_->belief_weights(decoder_->initial_list())); }
  State initial_state() const { return {decoder_->initial_list().members, false}; }

  std::vector<Control> controls(const State& x, Index) const {
    if (x.solved) return {kPass};
    return decoder_->allowed_guesses(MysteryList{x.list});
  }

  std::vector<Transition<State>> transitions(const State& x, Index i, const Control& u, Index) const {
    if (x.solved) return {{x, 1.0, 0.0}};
    if (u == i) return {{State{{i}, true}, 1.0, 1.0}};
    return {{State{decoder_->filter(MysteryList{x.list}, u, decoder_->feedback(u, i)).members, false}, 1.0, 1.0}};
  }

  double terminal_cost(const State& x) const { return x.solved ? 0.0 : static_cast<double>(x.list.size()); }

  const Decoder& decoder() const { return *decoder_; }

  /// The decoder heuristic as a base policy shared by every hypothesis.
  std::function<Control(Index, const State&, Index)> heuristic_policy(Heuristic h) const {
    const Decoder* d = decoder_;
    return [d, h](Index, const State& x, Index) -> Control {
      if (x.solved) return kPass;
      return d->base_guess(MysteryList{x.list}, h);
    };
  }

 private:
  const Decoder* decoder_;
  Index horizon_;
};

}  // namespace seqroll
