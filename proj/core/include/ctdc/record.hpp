#pragma once

#include <compare>
#include <string>
#include <vector>

namespace ctdc {

// 1-based index into a task's state list.
struct StateId {
  int value = 0;

  constexpr StateId() = default;
  constexpr explicit StateId(int v) : value(v) {}

  friend constexpr auto operator<=>(StateId, StateId) = default;
};

// 0-based index into a task's knowledge-status list.
struct StatusId {
  int value = 0;

  constexpr StatusId() = default;
  constexpr explicit StatusId(int v) : value(v) {}

  friend constexpr auto operator<=>(StatusId, StatusId) = default;
};

struct Event {
  double time = 0.0;  // seconds from task onset
  StateId state;

  friend bool operator==(const Event&, const Event&) = default;
};

// One person's realization of one task: the system starts in the task's
// initial state at time 0 and every event is the state the action led to.
struct ProcessRecord {
  std::string person_id;
  std::string task_id;
  double initial_time = 0.0;
  std::vector<Event> events;

  std::size_t num_events() const noexcept { return events.size(); }

  friend bool operator==(const ProcessRecord&, const ProcessRecord&) = default;
};

}  // namespace ctdc
