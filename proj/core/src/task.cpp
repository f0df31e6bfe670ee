#include "ctdc/task.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ctdc/error.hpp"

namespace ctdc {

namespace detail {
extern const std::string_view kTicketsTask1Json;
extern const std::string_view kTicketsTask2Json;
}  // namespace detail

using nlohmann::json;

bool TaskDefinition::is_terminal(StateId s) const {
  return std::find(terminal_states_.begin(), terminal_states_.end(), s) != terminal_states_.end();
}

std::optional<StatusId> TaskDefinition::find_status(std::string_view label) const {
  for (std::size_t k = 0; k < statuses_.size(); ++k) {
    if (statuses_[k] == label) return StatusId(static_cast<int>(k));
  }
  return std::nullopt;
}

const std::string& TaskDefinition::status_label(StatusId s) const {
  return statuses_.at(static_cast<std::size_t>(s.value));
}

std::size_t TaskDefinition::cell(StateId s, StatusId k) const {
  if (!contains(s)) throw_data("state " + std::to_string(s.value) + " out of range for task " + id_);
  if (k.value < 0 || static_cast<std::size_t>(k.value) >= statuses_.size()) {
    throw_data("knowledge status " + std::to_string(k.value) + " out of range for task " + id_);
  }
  return static_cast<std::size_t>(s.value - 1) * statuses_.size() + static_cast<std::size_t>(k.value);
}

StatusId TaskDefinition::next_status(StatusId from, StateId entered) const {
  const std::size_t n = static_cast<std::size_t>(num_states_);
  if (!contains(entered)) throw_data("state " + std::to_string(entered.value) + " out of range for task " + id_);
  return transitions_.at(static_cast<std::size_t>(from.value) * n + static_cast<std::size_t>(entered.value - 1));
}

std::span<const Candidate> TaskDefinition::reachable(StateId current, StatusId status) const {
  return reachable_[cell(current, status)];
}

std::span<const std::string> TaskDefinition::attributes(StateId s) const {
  if (!contains(s)) throw_data("state " + std::to_string(s.value) + " out of range for task " + id_);
  return attributes_[static_cast<std::size_t>(s.value - 1)];
}

HistoryState initial_history(const TaskDefinition& task) {
  HistoryState h;
  h.current = task.initial_state();
  h.status = task.initial_status();
  h.terminated = task.is_terminal(h.current);
  return h;
}

HistoryState advance(const TaskDefinition& task, const HistoryState& h, StateId next) {
  if (h.terminated) {
    throw_data("task " + task.id() + ": cannot advance a terminated history (state " +
               std::to_string(h.current.value) + ")");
  }
  const auto reach = task.reachable(h.current, h.status);
  const bool legal = std::any_of(reach.begin(), reach.end(), [&](const Candidate& c) { return c.state == next; });
  if (!legal) {
    throw_data("task " + task.id() + ": illegal transition " + std::to_string(h.current.value) + " -> " +
               std::to_string(next.value) + " (status " + task.status_label(h.status) + ")");
  }
  HistoryState out;
  out.current = next;
  out.status = task.next_status(h.status, next);
  out.steps_taken = h.steps_taken + 1;
  out.terminated = task.is_terminal(next);
  return out;
}

std::span<const Candidate> candidates(const TaskDefinition& task, const HistoryState& h) {
  if (h.terminated) throw_data("task " + task.id() + ": no candidates after termination");
  return task.reachable(h.current, h.status);
}

HistoryState replay(const TaskDefinition& task, const ProcessRecord& record) {
  HistoryState h = initial_history(task);
  double last = record.initial_time;
  for (const Event& e : record.events) {
    if (!(e.time > last)) {
      throw_data("person " + record.person_id + ", task " + task.id() + ": non-increasing time at " +
                 std::to_string(e.time));
    }
    if (h.terminated) {
      throw_data("person " + record.person_id + ", task " + task.id() + ": event after terminal state");
    }
    h = advance(task, h, e.state);
    last = e.time;
  }
  return h;
}

bool derive_outcome(const TaskDefinition& task, const ProcessRecord& record) {
  HistoryState h = initial_history(task);
  HistoryState before = h;
  for (const Event& e : record.events) {
    before = h;
    h = advance(task, h, e.state);
  }
  if (!h.terminated || record.events.empty()) return false;
  for (const SuccessRule& rule : task.success_rules()) {
    if (before.current != rule.from || h.current != rule.to) continue;
    if (rule.statuses.empty() ||
        std::find(rule.statuses.begin(), rule.statuses.end(), before.status) != rule.statuses.end()) {
      return true;
    }
  }
  return false;
}

// Builds a TaskDefinition from parsed JSON, accumulating every problem found
// rather than stopping at the first.
class TaskBuilder {
 public:
  explicit TaskBuilder(std::vector<std::string>& diagnostics) : diag_(diagnostics) {}

  std::optional<TaskDefinition> build(const json& doc) {
    if (!doc.is_object()) {
      diag_.push_back("task file: top level must be an object");
      return std::nullopt;
    }
    TaskDefinition t;
    t.id_ = string_field(doc, "task_id").value_or("");
    if (t.id_.empty()) diag_.push_back("task_id: missing or empty");
    if (doc.contains("description") && doc["description"].is_string()) t.description_ = doc["description"];

    if (!parse_states(doc, t)) return std::nullopt;
    if (!parse_statuses(doc, t)) return std::nullopt;

    const std::size_t before = diag_.size();
    t.initial_state_ = state_field(doc, "initial_state", t).value_or(StateId(1));
    if (doc.contains("terminal_states") && doc["terminal_states"].is_array()) {
      for (const auto& v : doc["terminal_states"]) {
        if (auto s = as_state(v, t, "terminal_states")) t.terminal_states_.push_back(*s);
      }
      std::sort(t.terminal_states_.begin(), t.terminal_states_.end());
    } else {
      diag_.push_back("terminal_states: missing or not an array");
    }
    if (t.is_terminal(t.initial_state_)) diag_.push_back("initial_state: must not be terminal");

    parse_transitions(doc, t);
    parse_effectiveness(doc, t);
    parse_success(doc, t);
    if (diag_.size() != before) return std::nullopt;
    return t;
  }

 private:
  std::optional<std::string> string_field(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_string()) return std::nullopt;
    return doc[key].get<std::string>();
  }

  std::optional<StateId> as_state(const json& v, const TaskDefinition& t, const std::string& where) {
    if (!v.is_number_integer()) {
      diag_.push_back(where + ": state index must be an integer");
      return std::nullopt;
    }
    const int id = v.get<int>();
    if (id < 1 || id > t.num_states_) {
      diag_.push_back(where + ": dangling state index " + std::to_string(id));
      return std::nullopt;
    }
    return StateId(id);
  }

  std::optional<StateId> state_field(const json& doc, const char* key, const TaskDefinition& t) {
    if (!doc.contains(key)) {
      diag_.push_back(std::string(key) + ": missing");
      return std::nullopt;
    }
    return as_state(doc[key], t, key);
  }

  std::optional<StatusId> as_status(const json& v, const TaskDefinition& t, const std::string& where) {
    if (!v.is_string()) {
      diag_.push_back(where + ": status label must be a string");
      return std::nullopt;
    }
    auto s = t.find_status(v.get<std::string>());
    if (!s) diag_.push_back(where + ": unknown status '" + v.get<std::string>() + "'");
    return s;
  }

  bool parse_states(const json& doc, TaskDefinition& t) {
    if (!doc.contains("states") || !doc["states"].is_array() || doc["states"].empty()) {
      diag_.push_back("states: missing or empty");
      return false;
    }
    if (doc.contains("attribute_names") && doc["attribute_names"].is_array()) {
      for (const auto& a : doc["attribute_names"]) {
        if (a.is_string()) t.attribute_names_.push_back(a.get<std::string>());
      }
    }
    const auto& states = doc["states"];
    t.num_states_ = static_cast<int>(states.size());
    t.attributes_.resize(states.size());
    bool ok = true;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto& s = states[i];
      if (!s.is_object() || !s.contains("id") || !s["id"].is_number_integer() ||
          s["id"].get<int>() != static_cast<int>(i) + 1) {
        diag_.push_back("states[" + std::to_string(i) + "]: ids must be 1.." + std::to_string(states.size()) +
                        " in order");
        ok = false;
        continue;
      }
      if (s.contains("attributes") && s["attributes"].is_array()) {
        for (const auto& a : s["attributes"]) t.attributes_[i].push_back(a.is_string() ? a.get<std::string>() : a.dump());
        if (!t.attribute_names_.empty() && t.attributes_[i].size() != t.attribute_names_.size()) {
          diag_.push_back("states[" + std::to_string(i) + "]: attribute count does not match attribute_names");
          ok = false;
        }
      }
    }
    return ok;
  }

  bool parse_statuses(const json& doc, TaskDefinition& t) {
    if (!doc.contains("statuses") || !doc["statuses"].is_array() || doc["statuses"].empty()) {
      diag_.push_back("statuses: missing or empty");
      return false;
    }
    for (const auto& s : doc["statuses"]) {
      if (!s.is_string()) {
        diag_.push_back("statuses: labels must be strings");
        return false;
      }
      const std::string label = s.get<std::string>();
      if (t.find_status(label)) {
        diag_.push_back("statuses: duplicate label '" + label + "'");
        return false;
      }
      t.statuses_.push_back(label);
    }
    if (!doc.contains("initial_status")) {
      diag_.push_back("initial_status: missing");
      return false;
    }
    auto init = as_status(doc["initial_status"], t, "initial_status");
    if (!init) return false;
    t.initial_status_ = *init;
    return true;
  }

  void parse_transitions(const json& doc, TaskDefinition& t) {
    const std::size_t n = static_cast<std::size_t>(t.num_states_);
    const std::size_t k = t.statuses_.size();
    t.transitions_.resize(n * k);
    for (std::size_t from = 0; from < k; ++from) {
      for (std::size_t s = 0; s < n; ++s) t.transitions_[from * n + s] = StatusId(static_cast<int>(from));
    }
    if (!doc.contains("status_transitions")) return;
    if (!doc["status_transitions"].is_array()) {
      diag_.push_back("status_transitions: must be an array");
      return;
    }
    std::map<std::pair<int, int>, int> seen;
    for (std::size_t i = 0; i < doc["status_transitions"].size(); ++i) {
      const auto& tr = doc["status_transitions"][i];
      const std::string where = "status_transitions[" + std::to_string(i) + "]";
      if (!tr.is_object() || !tr.contains("from") || !tr.contains("on") || !tr.contains("to")) {
        diag_.push_back(where + ": needs from, on, to");
        continue;
      }
      auto from = as_status(tr["from"], t, where + ".from");
      auto to = as_status(tr["to"], t, where + ".to");
      auto on = as_state(tr["on"], t, where + ".on");
      if (!from || !to || !on) continue;
      auto [it, inserted] = seen.emplace(std::pair{from->value, on->value}, to->value);
      if (!inserted && it->second != to->value) {
        diag_.push_back(where + ": conflicting transition for the same (status, state)");
        continue;
      }
      t.transitions_[static_cast<std::size_t>(from->value) * n + static_cast<std::size_t>(on->value - 1)] = *to;
    }
  }

  void add_candidates(const json& list, double value, std::vector<Candidate>& out, const TaskDefinition& t,
                      const std::string& where) {
    if (!list.is_array()) {
      diag_.push_back(where + ": must be an array of state indices");
      return;
    }
    for (const auto& v : list) {
      if (auto s = as_state(v, t, where)) out.push_back({*s, value});
    }
  }

  void parse_effectiveness(const json& doc, TaskDefinition& t) {
    const std::size_t n = static_cast<std::size_t>(t.num_states_);
    const std::size_t k = t.statuses_.size();
    t.reachable_.assign(n * k, {});
    std::vector<bool> defined(n * k, false);
    if (!doc.contains("effectiveness") || !doc["effectiveness"].is_array()) {
      diag_.push_back("effectiveness: missing or not an array");
      return;
    }
    for (std::size_t i = 0; i < doc["effectiveness"].size(); ++i) {
      const auto& row = doc["effectiveness"][i];
      const std::string where = "effectiveness[" + std::to_string(i) + "]";
      if (!row.is_object() || !row.contains("state") || !row.contains("status")) {
        diag_.push_back(where + ": needs state and status");
        continue;
      }
      auto s = as_state(row["state"], t, where + ".state");
      auto st = as_status(row["status"], t, where + ".status");
      if (!s || !st) continue;
      const std::size_t c = t.cell(*s, *st);
      if (defined[c]) {
        diag_.push_back(where + ": duplicate row for state " + std::to_string(s->value) + " status " +
                        t.statuses_[static_cast<std::size_t>(st->value)]);
        continue;
      }
      defined[c] = true;
      if (t.is_terminal(*s)) {
        diag_.push_back(where + ": terminal state " + std::to_string(s->value) + " cannot have candidates");
        continue;
      }
      std::vector<Candidate> cands;
      if (row.contains("+")) add_candidates(row["+"], 1.0, cands, t, where + ".+");
      if (row.contains("-")) add_candidates(row["-"], 0.0, cands, t, where + ".-");
      if (row.contains("values")) {
        if (!row["values"].is_array()) {
          diag_.push_back(where + ".values: must be an array of [state, value] pairs");
        } else {
          for (const auto& pair : row["values"]) {
            if (!pair.is_array() || pair.size() != 2 || !pair[1].is_number()) {
              diag_.push_back(where + ".values: entries must be [state, value]");
              continue;
            }
            if (auto cs = as_state(pair[0], t, where + ".values")) cands.push_back({*cs, pair[1].get<double>()});
          }
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.state < b.state; });
      for (std::size_t j = 1; j < cands.size(); ++j) {
        if (cands[j].state == cands[j - 1].state) {
          diag_.push_back(where + ": candidate " + std::to_string(cands[j].state.value) + " listed twice");
        }
      }
      t.reachable_[c] = std::move(cands);
    }
    for (std::size_t si = 0; si < n; ++si) {
      const StateId s(static_cast<int>(si) + 1);
      if (t.is_terminal(s)) continue;
      for (std::size_t sk = 0; sk < k; ++sk) {
        if (t.reachable_[si * k + sk].empty()) {
          diag_.push_back("effectiveness: empty reachable set for non-terminal state " + std::to_string(s.value) +
                          " status " + t.statuses_[sk]);
        }
      }
    }
  }

  void parse_success(const json& doc, TaskDefinition& t) {
    if (!doc.contains("success")) return;
    const json rules = doc["success"].is_array() ? doc["success"] : json::array({doc["success"]});
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto& r = rules[i];
      const std::string where = "success[" + std::to_string(i) + "]";
      if (!r.is_object() || !r.contains("from") || !r.contains("to")) {
        diag_.push_back(where + ": needs from and to");
        continue;
      }
      auto from = as_state(r["from"], t, where + ".from");
      auto to = as_state(r["to"], t, where + ".to");
      if (!from || !to) continue;
      if (!t.is_terminal(*to)) diag_.push_back(where + ".to: must be a terminal state");
      SuccessRule rule{*from, *to, {}};
      if (r.contains("statuses")) {
        for (const auto& st : r["statuses"]) {
          if (auto id = as_status(st, t, where + ".statuses")) rule.statuses.push_back(*id);
        }
      }
      t.success_rules_.push_back(std::move(rule));
    }
  }

  std::vector<std::string>& diag_;
};

namespace {

std::optional<TaskDefinition> parse(std::string_view text, std::vector<std::string>& diagnostics) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    diagnostics.push_back(std::string("task file: malformed JSON: ") + e.what());
    return std::nullopt;
  }
  return TaskBuilder(diagnostics).build(doc);
}

}  // namespace

std::vector<std::string> validate_task_text(std::string_view text) {
  std::vector<std::string> diagnostics;
  parse(text, diagnostics);
  return diagnostics;
}

TaskDefinition load_task(std::string_view text) {
  std::vector<std::string> diagnostics;
  auto task = parse(text, diagnostics);
  if (!task) {
    std::ostringstream msg;
    msg << "invalid task definition";
    for (const auto& d : diagnostics) msg << "\n  " << d;
    throw_schema(msg.str());
  }
  return std::move(*task);
}

TaskDefinition load_task_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_usage("cannot open task file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_task(buf.str());
}

std::vector<std::string> builtin_task_names() { return {"tickets-task1", "tickets-task2"}; }

std::string_view builtin_task_text(std::string_view name) {
  if (name == "tickets-task1") return detail::kTicketsTask1Json;
  if (name == "tickets-task2") return detail::kTicketsTask2Json;
  throw_usage("unknown builtin task '" + std::string(name) + "'");
}

const TaskDefinition& builtin_task(std::string_view name) {
  static const TaskDefinition task1 = load_task(detail::kTicketsTask1Json);
  static const TaskDefinition task2 = load_task(detail::kTicketsTask2Json);
  if (name == "tickets-task1") return task1;
  if (name == "tickets-task2") return task2;
  throw_usage("unknown builtin task '" + std::string(name) + "'");
}

TaskDefinition resolve_task(std::string_view name_or_path) {
  for (const auto& n : builtin_task_names()) {
    if (n == name_or_path) return builtin_task(n);
  }
  return load_task_file(std::filesystem::path(std::string(name_or_path)));
}

}  // namespace ctdc
