#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctdc/record.hpp"

namespace ctdc {

// A reachable next state together with its effectiveness value V.
struct Candidate {
  StateId state;
  double value = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// A terminal transition counts as success when it goes from `from` to `to`
// and the knowledge status just before it is one of `statuses` (any status
// when empty).
struct SuccessRule {
  StateId from;
  StateId to;
  std::vector<StatusId> statuses;
};

// Finite-state-automaton description of an interactive task. Immutable once
// loaded.
class TaskDefinition {
 public:
  const std::string& id() const noexcept { return id_; }
  const std::string& description() const noexcept { return description_; }
  int num_states() const noexcept { return num_states_; }
  StateId initial_state() const noexcept { return initial_state_; }
  const std::vector<StateId>& terminal_states() const noexcept { return terminal_states_; }
  bool is_terminal(StateId s) const;
  bool contains(StateId s) const noexcept { return s.value >= 1 && s.value <= num_states_; }

  const std::vector<std::string>& statuses() const noexcept { return statuses_; }
  std::size_t num_statuses() const noexcept { return statuses_.size(); }
  StatusId initial_status() const noexcept { return initial_status_; }
  std::optional<StatusId> find_status(std::string_view label) const;
  const std::string& status_label(StatusId s) const;

  // Knowledge status after entering `entered` while in `from`.
  StatusId next_status(StatusId from, StateId entered) const;

  // Reachable set S(F_t) with effectiveness values, ascending by state id.
  // Empty for terminal states.
  std::span<const Candidate> reachable(StateId current, StatusId status) const;

  const std::vector<std::string>& attribute_names() const noexcept { return attribute_names_; }
  std::span<const std::string> attributes(StateId s) const;

  const std::vector<SuccessRule>& success_rules() const noexcept { return success_rules_; }

 private:
  friend class TaskBuilder;

  std::size_t cell(StateId s, StatusId k) const;

  std::string id_;
  std::string description_;
  int num_states_ = 0;
  StateId initial_state_;
  std::vector<StateId> terminal_states_;
  std::vector<std::string> statuses_;
  StatusId initial_status_;
  std::vector<StatusId> transitions_;             // [status][state-1]
  std::vector<std::vector<Candidate>> reachable_;  // [state-1][status]
  std::vector<std::string> attribute_names_;
  std::vector<std::vector<std::string>> attributes_;
  std::vector<SuccessRule> success_rules_;
};

// Sufficient statistic of the event history for automaton tasks.
struct HistoryState {
  StateId current;
  StatusId status;
  std::size_t steps_taken = 0;
  bool terminated = false;

  friend bool operator==(const HistoryState&, const HistoryState&) = default;
};

HistoryState initial_history(const TaskDefinition& task);

HistoryState advance(const TaskDefinition& task, const HistoryState& h, StateId next);

std::span<const Candidate> candidates(const TaskDefinition& task, const HistoryState& h);

// Replays a record through the automaton, checking time ordering and
// transition legality. Throws Error(data) naming the first violation.
HistoryState replay(const TaskDefinition& task, const ProcessRecord& record);

// Binary task outcome. Non-terminated records are failures.
bool derive_outcome(const TaskDefinition& task, const ProcessRecord& record);

// Parsing and validation of the JSON task definition format.
std::vector<std::string> validate_task_text(std::string_view text);
TaskDefinition load_task(std::string_view text);
TaskDefinition load_task_file(const std::filesystem::path& path);

// Bundled TICKETS tasks: "tickets-task1" and "tickets-task2".
std::vector<std::string> builtin_task_names();
std::string_view builtin_task_text(std::string_view name);
const TaskDefinition& builtin_task(std::string_view name);

// A builtin name or a path to a task file.
TaskDefinition resolve_task(std::string_view name_or_path);

}  // namespace ctdc
