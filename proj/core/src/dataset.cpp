#include "ctdc/dataset.hpp"

#include <map>
#include <unordered_map>

#include "ctdc/error.hpp"

namespace ctdc {

Dataset::Dataset(std::vector<TaskDefinition> tasks, std::span<const ProcessRecord> records, DatasetOptions options)
    : tasks_(std::move(tasks)) {
  build(records, options, false);
}

Dataset::Dataset(std::vector<TaskDefinition> tasks, std::span<const ProcessRecord> records,
                 const std::vector<std::string>& person_ids, DatasetOptions options)
    : tasks_(std::move(tasks)), person_ids_(person_ids) {
  build(records, options, true);
}

std::vector<std::string> Dataset::task_ids() const {
  std::vector<std::string> out;
  for (const auto& t : tasks_) out.push_back(t.id());
  return out;
}

std::optional<std::size_t> Dataset::task_index(const std::string& task_id) const {
  for (std::size_t k = 0; k < tasks_.size(); ++k) {
    if (tasks_[k].id() == task_id) return k;
  }
  return std::nullopt;
}

void Dataset::build(std::span<const ProcessRecord> records, DatasetOptions options, bool fixed_persons) {
  if (tasks_.empty()) throw_usage("dataset: no tasks");
  const std::size_t K = tasks_.size();
  std::unordered_map<std::string, std::size_t> person_index;
  for (std::size_t i = 0; i < person_ids_.size(); ++i) {
    if (!person_index.emplace(person_ids_[i], i).second) throw_usage("dataset: duplicate person id " + person_ids_[i]);
  }
  situation_types_.assign(K, {});
  std::vector<std::map<ChoiceSituation, std::uint32_t>> type_index(K);

  // first pass fixes the person order
  if (!fixed_persons) {
    for (const auto& r : records) {
      if (person_index.emplace(r.person_id, person_ids_.size()).second) person_ids_.push_back(r.person_id);
    }
  }
  cells_.assign(person_ids_.size() * K, {});

  for (const auto& r : records) {
    const auto k = task_index(r.task_id);
    if (!k) throw_data("record for person " + r.person_id + " has undeclared task '" + r.task_id + "'");
    const auto pit = person_index.find(r.person_id);
    if (pit == person_index.end()) throw_data("record for unknown person " + r.person_id);
    Cell& cell = cells_[pit->second * K + *k];
    if (cell.present) throw_data("duplicate record for person " + r.person_id + ", task " + r.task_id);
    if (r.events.empty()) {
      exclusions_.push_back({r.person_id, r.task_id, "no events"});
      continue;
    }
    const HistoryState end = replay(tasks_[*k], r);
    if (!end.terminated && !options.allow_incomplete) {
      exclusions_.push_back({r.person_id, r.task_id, "incomplete"});
      continue;
    }
    const CompiledRecord compiled = compile_record(r, tasks_[*k]);
    cell.present = true;
    cell.num_events = compiled.num_events;
    cell.active_span = compiled.active_span;
    for (const auto& [situation, count] : compiled.situations) {
      auto [it, inserted] =
          type_index[*k].emplace(situation, static_cast<std::uint32_t>(situation_types_[*k].size()));
      if (inserted) situation_types_[*k].push_back(situation);
      cell.situations.push_back({it->second, static_cast<std::uint32_t>(count)});
    }
  }
}

bool Dataset::person_has_data(std::size_t person) const {
  for (std::size_t k = 0; k < tasks_.size(); ++k) {
    if (cell(person, k).present) return true;
  }
  return false;
}

std::size_t Dataset::num_records() const {
  std::size_t n = 0;
  for (const auto& c : cells_) n += c.present ? 1 : 0;
  return n;
}

Dataset Dataset::resample(std::span<const std::size_t> persons) const {
  Dataset out;
  out.tasks_ = tasks_;
  out.situation_types_ = situation_types_;
  const std::size_t K = tasks_.size();
  out.person_ids_.reserve(persons.size());
  out.cells_.reserve(persons.size() * K);
  for (std::size_t p : persons) {
    if (p >= num_persons()) throw_usage("dataset resample: person index out of range");
    out.person_ids_.push_back(person_ids_[p]);
    for (std::size_t k = 0; k < K; ++k) out.cells_.push_back(cell(p, k));
  }
  return out;
}

Dataset Dataset::select_tasks(const std::vector<std::size_t>& tasks) const {
  Dataset out;
  out.person_ids_ = person_ids_;
  for (std::size_t k : tasks) {
    out.tasks_.push_back(task(k));
    out.situation_types_.push_back(situation_types_.at(k));
  }
  out.cells_.reserve(person_ids_.size() * tasks.size());
  for (std::size_t i = 0; i < person_ids_.size(); ++i) {
    for (std::size_t k : tasks) out.cells_.push_back(cell(i, k));
  }
  for (const auto& e : exclusions_) {
    for (std::size_t k : tasks) {
      if (tasks_[k].id() == e.task_id) out.exclusions_.push_back(e);
    }
  }
  return out;
}

}  // namespace ctdc
