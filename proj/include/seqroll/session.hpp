#pragma once

// Interactive decoding-assistant sessions, independent of any transport.
//
// A session owns a Decoder, the current mystery list and the relayed
// history. Every mutation is computed on a copy, replay-checked from the
// initial list and only then committed, so a rejected request leaves the
// session byte-identical.
//
// Create parameters (JSON object):
//   rule          "wordle" | "mastermind"                 (default mastermind)
//   length        code length, for enumerated code spaces
//   colors        number of symbols 0-9A-Z, mastermind shorthand
//   alphabet      explicit symbol set, enumerated with `length`
//   words         candidate list; overrides enumeration
//   extra_guesses admissible non-candidate guesses
//   guess_mode    "mystery-list" | "full-list"            (default mystery-list)
//   prior         {"CODE": weight, ...} over every candidate (optional)
//   heuristic     "max-expected-shrink" | "max-entropy" | "first-consistent"
//   prune         rollout candidate limit, 0 = none        (default 16)
//   top_k         suggestions reported in views            (default 10)
//
// Feedback (JSON object): {"guess": "CRANE", "feedback": "GY-G-"} for wordle,
// {"guess": "012", "feedback": {"black": 1, "white": 0}} for mastermind.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "seqroll/decoder.hpp"
#include "seqroll/problem_io.hpp"

namespace seqroll {

/// Error carrying an HTTP-style status and a machine-readable reason.
class SessionError : public Error {
 public:
  SessionError(int status, std::string reason, const std::string& message)
      : Error(message), status_(status), reason_(std::move(reason)) {}
  int status() const noexcept { return status_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  int status_;
  std::string reason_;
};

struct SessionConfig {
  Heuristic heuristic = Heuristic::max_expected_shrink;
  std::optional<Index> prune_limit = 16;
  Index top_k = 10;
};

struct HistoryEntry {
  std::string guess;
  Feedback feedback;
  Index list_size = 0;  ///< after applying this entry
};

inline std::string to_string(GuessMode mode) { return mode == GuessMode::mystery_list ? "mystery-list" : "full-list"; }

inline GuessMode parse_guess_mode(std::string_view text) {
  if (text == "mystery-list" || text == "mystery") return GuessMode::mystery_list;
  if (text == "full-list" || text == "full") return GuessMode::full_list;
  throw InvalidArgument("unknown guess mode '" + std::string(text) + "'");
}

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline SessionError bad_request(const std::string& message) { return {400, "invalid_parameters", message}; }

inline std::vector<std::string> upper_codes(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw bad_request(std::string("'") + field + "' must be an array of codes");
  std::vector<std::string> out;
  for (const auto& w : j) {
    if (!w.is_string()) throw bad_request(std::string("'") + field + "' must contain strings");
    std::string code = w.get<std::string>();
    for (char& c : code) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    out.push_back(std::move(code));
  }
  return out;
}

}  // namespace detail

/// Builds the decoding problem and config from create parameters.
/// `default_words` is used for wordle sessions that give no list.
inline std::pair<DecodingProblem, SessionConfig> parse_session_parameters(
    const nlohmann::json& params, const std::vector<std::string>& default_words = {}) {
  using detail::bad_request;
  if (!params.is_object()) throw bad_request("parameters must be a JSON object");
  try {
    const Rule rule = parse_rule(params.value("rule", std::string("mastermind")));
    DecodingProblem problem;
    std::string alphabet = params.value("alphabet", std::string());
    if (params.contains("words")) {
      problem = DecodingProblem::from_list(rule, detail::upper_codes(params.at("words"), "words"), alphabet);
    } else if (params.contains("length") && (params.contains("colors") || !alphabet.empty())) {
      const Index length = params.at("length").get<Index>();
      if (alphabet.empty()) {
        const Index colors = params.at("colors").get<Index>();
        if (colors == 0 || colors > kDefaultSymbols.size()) throw bad_request("'colors' out of range");
        alphabet = std::string(kDefaultSymbols.substr(0, colors));
      }
      problem = DecodingProblem::all_codes(rule, length, alphabet);
    } else if (!default_words.empty()) {
      problem = DecodingProblem::from_list(rule, default_words, alphabet);
    } else {
      throw bad_request("give 'words', or 'length' with 'colors' or 'alphabet'");
    }
    if (params.contains("extra_guesses")) problem.extra_guesses = detail::upper_codes(params.at("extra_guesses"), "extra_guesses");
    if (params.contains("guess_mode")) problem.guess_mode = parse_guess_mode(params.at("guess_mode").get<std::string>());
    if (params.contains("prior")) {
      const auto& prior = params.at("prior");
      if (!prior.is_object()) throw bad_request("'prior' must map codes to weights");
      std::map<std::string, double> weights;
      for (const auto& [code, w] : prior.items()) {
        std::string key = code;
        for (char& c : key) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        weights[key] = w.get<double>();
      }
      for (const auto& c : problem.candidates) {
        auto it = weights.find(c);
        if (it == weights.end()) throw bad_request("prior has no weight for '" + c + "'");
        problem.prior.push_back(it->second);
      }
    }
    problem.validate();

    SessionConfig cfg;
    if (params.contains("heuristic")) cfg.heuristic = parse_heuristic(params.at("heuristic").get<std::string>());
    if (params.contains("prune")) {
      const Index prune = params.at("prune").get<Index>();
      cfg.prune_limit = prune == 0 ? std::nullopt : std::optional<Index>(prune);
    }
    if (params.contains("top_k")) cfg.top_k = params.at("top_k").get<Index>();
    return {std::move(problem), cfg};
  } catch (const SessionError&) {
    throw;
  } catch (const Error& e) {
    throw bad_request(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw bad_request(e.what());
  }
}

class Session {
 public:
  Session(std::string id, DecodingProblem problem, SessionConfig config)
      : id_(std::move(id)), decoder_(std::move(problem)), config_(config) {
    list_ = decoder_.initial_list();
    created_ = updated_ = detail::utc_timestamp();
    refresh_suggestion();
  }

  const std::string& id() const { return id_; }
  const Decoder& decoder() const { return decoder_; }
  const MysteryList& list() const { return list_; }
  const std::vector<HistoryEntry>& history() const { return history_; }
  bool solved() const { return solved_; }
  const std::optional<RolloutGuess>& suggestion() const { return suggestion_; }

  /// Parses the feedback payload against this session's rule and length.
  Feedback parse_feedback(const nlohmann::json& value) const {
    const auto& p = decoder_.problem();
    try {
      if (p.rule == Rule::wordle) {
        if (!value.is_string()) throw SessionError(400, "malformed_feedback", "wordle feedback must be a string over G, Y, -");
        return Feedback::parse(p.rule, p.length, value.get<std::string>());
      }
      if (value.is_object()) {
        Feedback fb;
        fb.rule = Rule::mastermind;
        fb.black = value.at("black").get<Index>();
        fb.white = value.at("white").get<Index>();
        fb.validate(p.length);
        return fb;
      }
      if (value.is_string()) return Feedback::parse(p.rule, p.length, value.get<std::string>());
      throw SessionError(400, "malformed_feedback", "mastermind feedback must be {\"black\": b, \"white\": w}");
    } catch (const SessionError&) {
      throw;
    } catch (const Error& e) {
      throw SessionError(400, "malformed_feedback", e.what());
    } catch (const nlohmann::json::exception& e) {
      throw SessionError(400, "malformed_feedback", e.what());
    }
  }

  /// Applies one relayed (guess, feedback) pair atomically.
  void post_feedback(std::string guess, const Feedback& fb) {
    for (char& c : guess) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const auto& p = decoder_.problem();
    if (solved_) throw SessionError(409, "already_solved", "the session is already solved");
    if (!p.well_formed(guess))
      throw SessionError(400, "malformed_guess", "guess '" + guess + "' is not " + std::to_string(p.length) +
                                                     " symbols over the alphabet");
    MysteryList next;
    try {
      next = decoder_.shrink(list_, guess, fb);
    } catch (const Contradiction& e) {
      throw SessionError(409, "inconsistent_feedback", e.what());
    } catch (const InvalidArgument& e) {
      throw SessionError(400, "malformed_feedback", e.what());
    }
    auto history = history_;
    history.push_back({guess, fb, next.size()});
    if (replay(history) != next) throw Error("session history no longer replays to the mystery list");
    list_ = std::move(next);
    history_ = std::move(history);
    solved_ = fb.solved(p.length);
    updated_ = detail::utc_timestamp();
    refresh_suggestion();
  }

  /// The list obtained by applying `history` to the initial list.
  MysteryList replay(const std::vector<HistoryEntry>& history) const {
    MysteryList list = decoder_.initial_list();
    for (const auto& h : history) list = decoder_.shrink(list, h.guess, h.feedback);
    return list;
  }

  nlohmann::json view() const {
    using nlohmann::json;
    const auto& p = decoder_.problem();
    json v;
    v["id"] = id_;
    v["rule"] = to_string(p.rule);
    v["length"] = p.length;
    v["alphabet"] = p.alphabet;
    v["candidate_count"] = decoder_.candidate_count();
    v["list_size"] = list_.size();
    v["solved"] = solved_;
    v["solution"] = solved_ ? json(history_.back().guess) : json(nullptr);
    v["suggestion"] = suggestion_ ? json(decoder_.code(suggestion_->guess)) : json(nullptr);
    json suggestions = json::array();
    if (suggestion_) {
      for (Index j = 0; j < std::min(config_.top_k, suggestion_->scores.size()); ++j) {
        const auto& s = suggestion_->scores[j];
        suggestions.push_back({{"guess", decoder_.code(s.guess)}, {"q", s.q}, {"in_list", list_.contains(s.guess)}});
      }
    }
    v["suggestions"] = std::move(suggestions);
    json belief = json::array();
    const auto w = decoder_.belief_weights(list_);
    for (Index j = 0; j < list_.size(); ++j)
      belief.push_back({{"code", decoder_.code(list_.members[j])}, {"weight", w[j]}});
    v["belief"] = std::move(belief);
    json history = json::array();
    for (const auto& h : history_) {
      json fb = p.rule == Rule::wordle ? json(h.feedback.to_string())
                                       : json{{"black", h.feedback.black}, {"white", h.feedback.white}};
      history.push_back({{"guess", h.guess}, {"feedback", std::move(fb)}, {"list_size", h.list_size}});
    }
    v["history"] = std::move(history);
    v["config"] = {{"heuristic", to_string(config_.heuristic)},
                   {"prune", config_.prune_limit ? *config_.prune_limit : Index{0}},
                   {"top_k", config_.top_k},
                   {"guess_mode", to_string(p.guess_mode)}};
    v["created_at"] = created_;
    v["updated_at"] = updated_;
    return v;
  }

 private:
  void refresh_suggestion() {
    if (solved_)
      suggestion_.reset();
    else
      suggestion_ = decoder_.rollout_guess(list_, config_.heuristic, config_.prune_limit);
  }

  std::string id_;
  Decoder decoder_;
  SessionConfig config_;
  MysteryList list_;
  std::vector<HistoryEntry> history_;
  bool solved_ = false;
  std::optional<RolloutGuess> suggestion_;
  std::string created_;
  std::string updated_;
};

/// Thread-safe in-memory session store. Distinct sessions proceed in
/// parallel; calls on one session are serialized by its own mutex.
class SessionStore {
 public:
  explicit SessionStore(std::uint64_t id_seed, std::vector<std::string> default_words = {})
      : rng_(id_seed), default_words_(std::move(default_words)) {}

  nlohmann::json create(const nlohmann::json& params) {
    auto [problem, cfg] = parse_session_parameters(params, default_words_);
    const std::string id = next_id();
    auto entry = std::make_shared<Entry>(id, std::move(problem), cfg);
    nlohmann::json view = entry->session.view();
    std::unique_lock lock(map_mutex_);
    sessions_.emplace(id, std::move(entry));
    return view;
  }

  nlohmann::json get(const std::string& id) const {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    return entry->session.view();
  }

  nlohmann::json post_feedback(const std::string& id, const nlohmann::json& body) {
    auto entry = find(id);
    if (!body.is_object() || !body.contains("guess") || !body.at("guess").is_string() || !body.contains("feedback"))
      throw SessionError(400, "malformed_feedback", "body must be {\"guess\": ..., \"feedback\": ...}");
    std::lock_guard lock(entry->mutex);
    const Feedback fb = entry->session.parse_feedback(body.at("feedback"));
    entry->session.post_feedback(body.at("guess").get<std::string>(), fb);
    return entry->session.view();
  }

  void remove(const std::string& id) {
    std::unique_lock lock(map_mutex_);
    if (sessions_.erase(id) == 0) throw SessionError(404, "unknown_session", "no session '" + id + "'");
  }

  Index size() const {
    std::shared_lock lock(map_mutex_);
    return sessions_.size();
  }

  /// Writes every session view as one JSON document.
  void snapshot(const std::string& path) const {
    nlohmann::json all = nlohmann::json::array();
    std::vector<std::shared_ptr<Entry>> entries;
    {
      std::shared_lock lock(map_mutex_);
      for (const auto& [id, e] : sessions_) entries.push_back(e);
    }
    for (const auto& e : entries) {
      std::lock_guard lock(e->mutex);
      all.push_back(e->session.view());
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write snapshot to " + path);
    out << all.dump(2) << '\n';
  }

 private:
  struct Entry {
    Entry(std::string id, DecodingProblem p, SessionConfig c) : session(std::move(id), std::move(p), c) {}
    mutable std::mutex mutex;
    Session session;
  };

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(404, "unknown_session", "no session '" + id + "'");
    return it->second;
  }

  std::string next_id() {
    std::lock_guard lock(id_mutex_);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng_.next()));
    return buf;
  }

  mutable std::shared_mutex map_mutex_;
  std::mutex id_mutex_;
  Rng rng_;
  std::vector<std::string> default_words_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace seqroll
