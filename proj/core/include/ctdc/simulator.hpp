#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ctdc/params.hpp"
#include "ctdc/process_model.hpp"
#include "ctdc/task.hpp"

namespace ctdc {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream index, substream); the same triple
// always gives the same engine state.
Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

// How the time to the first action is drawn. It is conditioned on during
// estimation, so the choice does not affect parameter recovery.
struct FirstActionModel {
  enum class Kind { exponential, fixed };
  Kind kind = Kind::exponential;
  double fixed_seconds = 1.0;
};

struct SimulationConfig {
  std::size_t num_persons = 1;
  std::vector<TaskDefinition> tasks;
  FixedParams params;
  std::uint64_t seed = 1;
  std::size_t max_steps = 500;
  FirstActionModel first_action;

  void check() const;
};

// (theta, tau) ~ N(0, Sigma) via the lower-triangular factor.
TraitPair sample_traits(const TraitCovariance& sigma, Rng& rng);

struct SimulatedRecord {
  ProcessRecord record;
  bool truncated = false;  // stopped at max_steps before a terminal state
};

SimulatedRecord simulate_record(const TaskDefinition& task, TraitPair traits, TaskParams params, Rng& rng,
                                std::size_t max_steps, const FirstActionModel& first_action = {});

struct SimulatedCohort {
  std::vector<std::string> person_ids;
  std::vector<TraitPair> traits;         // per person
  std::vector<ProcessRecord> records;    // person-major, task order of the config
  std::vector<bool> truncated;           // parallel to records

  std::size_t num_truncated() const;
  // Records that reached a terminal state.
  std::vector<ProcessRecord> complete_records() const;
};

SimulatedCohort simulate_cohort(const SimulationConfig& config);

}  // namespace ctdc
