#pragma once

// A finite, time-invariant ParametricSystem given by tables, plus its
// declarative JSON definition format:
//
//   {
//     "kind": "adaptive",
//     "horizon": 2,
//     "states": ["s0", "s1", "s2"],
//     "controls": ["a", "b"],              // canonical control order
//     "initial_state": "s0",
//     "control_sets": {"s1": ["b"]},       // optional; default: all controls
//     "terminal_costs": {"s2": 1.0},       // optional; default 0
//     "base_policy": {"s0": "a"},          // optional; default: first allowed control
//     "hypotheses": [
//       {"name": "low", "prior": 0.5,
//        "transitions": [
//          {"state": "s0", "control": "a",
//           "outcomes": [{"next": "s1", "prob": 0.9, "cost": 1.0},
//                        {"next": "s2", "prob": 0.1, "cost": 1.0}]}]}
//     ]
//   }
//
// Every (state, allowed control) pair needs a transition entry for every
// hypothesis unless the state is absorbing (no entries at all for that
// state, in which case it loops to itself at zero cost).

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

#include "seqroll/adaptive.hpp"

namespace seqroll {

class FiniteSystem {
 public:
  using State = Index;
  using Control = Index;

  struct Outcome {
    Index next;
    double probability;
    double cost;
  };

  FiniteSystem() = default;

  Index horizon() const { return horizon_; }
  Index hypothesis_count() const { return hypotheses_.size(); }
  DiscreteBelief prior() const { return DiscreteBelief::from_weights(prior_); }
  State initial_state() const { return initial_; }
  std::vector<Control> controls(const State& x, Index) const { return control_sets_.at(x); }
  double terminal_cost(const State& x) const { return terminal_.at(x); }

  std::vector<Transition<State>> transitions(const State& x, Index i, const Control& u, Index) const {
    const auto& table = table_.at(i);
    auto it = table.find({x, u});
    if (it == table.end()) {
      if (absorbing_.at(x)) return {{x, 1.0, 0.0}};
      throw InvalidArgument("no transition for state '" + state_names_[x] + "', control '" + control_names_[u] +
                            "', hypothesis '" + hypotheses_[i] + "'");
    }
    std::vector<Transition<State>> out;
    for (const auto& o : it->second) out.push_back({o.next, o.probability, o.cost});
    return out;
  }

  const std::vector<std::string>& state_names() const { return state_names_; }
  const std::vector<std::string>& control_names() const { return control_names_; }
  const std::vector<std::string>& hypothesis_names() const { return hypotheses_; }

  bool deterministic() const {
    for (const auto& table : table_)
      for (const auto& [key, outs] : table)
        if (outs.size() != 1) return false;
    return true;
  }

  /// The file's base policy, shared by all hypotheses.
  std::function<Control(Index, const State&, Index)> base_policy() const {
    auto choice = base_;
    return [choice](Index, const State& x, Index) { return choice.at(x); };
  }

  static FiniteSystem from_json(const nlohmann::json& j);

 private:
  Index horizon_ = 0;
  Index initial_ = 0;
  std::vector<std::string> state_names_;
  std::vector<std::string> control_names_;
  std::vector<std::string> hypotheses_;
  std::vector<double> prior_;
  std::vector<double> terminal_;
  std::vector<std::vector<Control>> control_sets_;
  std::vector<bool> absorbing_;
  std::vector<Control> base_;
  std::vector<std::map<std::pair<State, Control>, std::vector<Outcome>>> table_;
};

namespace detail {

inline Index lookup_name(const std::vector<std::string>& names, const std::string& name, const std::string& field) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ParseError(field, "unknown name '" + name + "'");
  return static_cast<Index>(it - names.begin());
}

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + "." + key, e.what());
  }
}

}  // namespace detail

inline FiniteSystem FiniteSystem::from_json(const nlohmann::json& j) {
  using detail::field;
  using detail::lookup_name;
  if (!j.is_object()) throw ParseError("$", "problem definition must be an object");
  FiniteSystem sys;
  sys.horizon_ = field<Index>(j, "horizon", "$");
  sys.state_names_ = field<std::vector<std::string>>(j, "states", "$");
  sys.control_names_ = field<std::vector<std::string>>(j, "controls", "$");
  if (sys.state_names_.empty()) throw ParseError("$.states", "no states");
  if (sys.control_names_.empty()) throw ParseError("$.controls", "no controls");
  const Index n_states = sys.state_names_.size();
  sys.initial_ = lookup_name(sys.state_names_, field<std::string>(j, "initial_state", "$"), "$.initial_state");

  sys.terminal_.assign(n_states, 0.0);
  if (j.contains("terminal_costs")) {
    for (const auto& [name, value] : j.at("terminal_costs").items()) {
      if (!value.is_number()) throw ParseError("$.terminal_costs." + name, "expected a number");
      sys.terminal_[lookup_name(sys.state_names_, name, "$.terminal_costs")] = value.get<double>();
    }
  }

  std::vector<Control> all(sys.control_names_.size());
  for (Index u = 0; u < all.size(); ++u) all[u] = u;
  sys.control_sets_.assign(n_states, all);
  if (j.contains("control_sets")) {
    for (const auto& [name, list] : j.at("control_sets").items()) {
      const std::string where = "$.control_sets." + name;
      const Index x = lookup_name(sys.state_names_, name, "$.control_sets");
      std::vector<Control> set;
      for (const auto& c : list) {
        if (!c.is_string()) throw ParseError(where, "expected control names");
        set.push_back(lookup_name(sys.control_names_, c.get<std::string>(), where));
      }
      if (set.empty()) throw ParseError(where, "control set is empty");
      std::sort(set.begin(), set.end());
      sys.control_sets_[x] = set;
    }
  }

  if (!j.contains("hypotheses") || !j.at("hypotheses").is_array() || j.at("hypotheses").empty())
    throw ParseError("$.hypotheses", "expected a nonempty array");
  sys.absorbing_.assign(n_states, true);
  Index h = 0;
  for (const auto& hyp : j.at("hypotheses")) {
    const std::string where = "$.hypotheses[" + std::to_string(h) + "]";
    sys.hypotheses_.push_back(hyp.contains("name") ? hyp.at("name").get<std::string>() : "theta" + std::to_string(h));
    const double prior = hyp.contains("prior") ? hyp.at("prior").get<double>() : 1.0;
    if (!(prior >= 0.0)) throw ParseError(where + ".prior", "prior must be >= 0");
    sys.prior_.push_back(prior);
    auto& table = sys.table_.emplace_back();
    Index t_index = 0;
    for (const auto& tr : field<nlohmann::json>(hyp, "transitions", where)) {
      const std::string tw = where + ".transitions[" + std::to_string(t_index++) + "]";
      const Index x = lookup_name(sys.state_names_, field<std::string>(tr, "state", tw), tw + ".state");
      const Index u = lookup_name(sys.control_names_, field<std::string>(tr, "control", tw), tw + ".control");
      std::vector<Outcome> outs;
      double total = 0.0;
      Index o_index = 0;
      for (const auto& o : field<nlohmann::json>(tr, "outcomes", tw)) {
        const std::string ow = tw + ".outcomes[" + std::to_string(o_index++) + "]";
        Outcome out{lookup_name(sys.state_names_, field<std::string>(o, "next", ow), ow + ".next"),
                    o.contains("prob") ? o.at("prob").get<double>() : 1.0,
                    o.contains("cost") ? o.at("cost").get<double>() : 0.0};
        if (!(out.probability >= 0.0)) throw ParseError(ow + ".prob", "probability must be >= 0");
        total += out.probability;
        outs.push_back(out);
      }
      if (outs.empty()) throw ParseError(tw + ".outcomes", "no outcomes");
      if (std::abs(total - 1.0) > 1e-9) throw ParseError(tw + ".outcomes", "probabilities do not sum to 1");
      if (!table.emplace(std::make_pair(x, u), std::move(outs)).second)
        throw ParseError(tw, "duplicate transition entry");
      sys.absorbing_[x] = false;
    }
    ++h;
  }
  double prior_total = 0.0;
  for (double p : sys.prior_) prior_total += p;
  if (!(prior_total > 0.0)) throw ParseError("$.hypotheses", "prior weights sum to zero");

  // Non-absorbing states must define every allowed control for every hypothesis.
  for (Index i = 0; i < sys.table_.size(); ++i)
    for (Index x = 0; x < n_states; ++x) {
      if (sys.absorbing_[x]) continue;
      for (Control u : sys.control_sets_[x])
        if (!sys.table_[i].contains({x, u}))
          throw ParseError("$.hypotheses[" + std::to_string(i) + "]",
                           "missing transition for state '" + sys.state_names_[x] + "', control '" +
                               sys.control_names_[u] + "'");
    }
  for (Index x = 0; x < n_states; ++x)
    if (sys.absorbing_[x]) sys.control_sets_[x] = {sys.control_sets_[x].front()};

  sys.base_.resize(n_states);
  for (Index x = 0; x < n_states; ++x) sys.base_[x] = sys.control_sets_[x].front();
  if (j.contains("base_policy")) {
    for (const auto& [name, c] : j.at("base_policy").items()) {
      const std::string where = "$.base_policy." + name;
      const Index x = lookup_name(sys.state_names_, name, "$.base_policy");
      if (!c.is_string()) throw ParseError(where, "expected a control name");
      const Control u = lookup_name(sys.control_names_, c.get<std::string>(), where);
      const auto& set = sys.control_sets_[x];
      if (std::find(set.begin(), set.end(), u) == set.end()) throw ParseError(where, "control not allowed in this state");
      sys.base_[x] = u;
    }
  }
  return sys;
}

}  // namespace seqroll
