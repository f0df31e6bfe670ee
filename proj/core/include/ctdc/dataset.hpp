#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctdc/process_model.hpp"
#include "ctdc/task.hpp"

namespace ctdc {

struct DatasetOptions {
  // Keep records that never reached a terminal state. Off by default: such
  // records (give-ups, truncated simulations) are excluded from estimation.
  bool allow_incomplete = false;
};

struct Exclusion {
  std::string person_id;
  std::string task_id;
  std::string reason;
};

// Records grouped by person and compiled to sufficient statistics. Choice
// situations are pooled per task so the likelihood at a quadrature node is a
// weighted sum over a small table of distinct situations.
class Dataset {
 public:
  struct SituationCount {
    std::uint32_t type = 0;  // index into situation_types(k)
    std::uint32_t count = 0;
  };
  struct Cell {
    bool present = false;
    std::vector<SituationCount> situations;
    std::size_t num_events = 0;
    double active_span = 0.0;
  };

  Dataset() = default;

  // Persons appear in order of first appearance in `records`.
  Dataset(std::vector<TaskDefinition> tasks, std::span<const ProcessRecord> records, DatasetOptions options = {});

  // Explicit person list; persons without records are kept (empty rows).
  Dataset(std::vector<TaskDefinition> tasks, std::span<const ProcessRecord> records,
          const std::vector<std::string>& person_ids, DatasetOptions options = {});

  std::size_t num_persons() const noexcept { return person_ids_.size(); }
  std::size_t num_tasks() const noexcept { return tasks_.size(); }
  const std::string& person_id(std::size_t i) const { return person_ids_.at(i); }
  const std::vector<std::string>& person_ids() const noexcept { return person_ids_; }
  const TaskDefinition& task(std::size_t k) const { return tasks_.at(k); }
  const std::vector<TaskDefinition>& tasks() const noexcept { return tasks_; }
  std::vector<std::string> task_ids() const;
  std::optional<std::size_t> task_index(const std::string& task_id) const;

  const std::vector<ChoiceSituation>& situation_types(std::size_t k) const { return situation_types_.at(k); }
  const Cell& cell(std::size_t person, std::size_t k) const { return cells_[person * tasks_.size() + k]; }
  bool person_has_data(std::size_t person) const;
  std::size_t num_records() const;

  const std::vector<Exclusion>& exclusions() const noexcept { return exclusions_; }

  // Bootstrap resample (indices may repeat).
  Dataset resample(std::span<const std::size_t> persons) const;
  // Restrict to a subset of tasks, keeping every person.
  Dataset select_tasks(const std::vector<std::size_t>& tasks) const;

 private:
  void build(std::span<const ProcessRecord> records, DatasetOptions options, bool fixed_persons);

  std::vector<TaskDefinition> tasks_;
  std::vector<std::string> person_ids_;
  std::vector<std::vector<ChoiceSituation>> situation_types_;
  std::vector<Cell> cells_;  // [person][task]
  std::vector<Exclusion> exclusions_;
};

}  // namespace ctdc
