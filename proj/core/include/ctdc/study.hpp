#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctdc/dataset.hpp"
#include "ctdc/estimator.hpp"
#include "ctdc/params.hpp"
#include "ctdc/scoring.hpp"
#include "ctdc/simulator.hpp"

namespace ctdc {

struct StudyOptions {
  std::vector<std::string> settings = {"S1", "S2", "S3", "S4", "S5", "S6"};
  std::size_t replications = 50;
  std::uint64_t seed = 20190417;
  EmOptions em;
  int scoring_points = 41;
  std::size_t max_steps = 500;
  std::size_t jobs = 1;
  std::optional<std::filesystem::path> checkpoint_dir;
};

// Everything produced for one replication of one setting.
struct ReplicationRun {
  SimulationSetting setting;
  std::size_t replication = 0;
  FixedParams truth;
  SimulatedCohort cohort;
  Dataset joint;
  Dataset task1;
  Dataset task2;
  FitResult fit_joint;
  FitResult fit_task1;
  FitResult fit_task2;
  std::vector<TraitEstimate> scores_joint;
  std::vector<TraitEstimate> scores_task1;
  std::vector<TraitEstimate> scores_task2;
};

// Seed of the cohort for (setting, replication); independent of which other
// settings are run.
std::uint64_t replication_seed(std::uint64_t study_seed, const std::string& setting, std::size_t replication);

ReplicationRun run_replication(const SimulationSetting& setting, std::size_t replication, const StudyOptions& options);

struct TraitMse {
  double theta = 0.0;
  double tau = 0.0;
};

TraitMse trait_mse(const std::vector<TraitEstimate>& scores, const std::vector<TraitPair>& truth);

// Condensed result that goes into the output tables and checkpoints.
struct ReplicationSummary {
  std::string setting;
  std::size_t num_persons = 0;
  double rho = 0.0;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> names;
  std::vector<double> truth;     // flattened FixedParams
  std::vector<double> estimate;  // flattened joint fit
  bool converged = false;
  std::size_t em_iterations = 0;
  double final_loglik = 0.0;
  std::size_t truncated = 0;
  TraitMse joint;
  TraitMse task1;
  TraitMse task2;
};

ReplicationSummary summarize_run(const ReplicationRun& run);

std::string summary_to_json(const ReplicationSummary& s);
ReplicationSummary summary_from_json(std::string_view text);

// Runs every (setting, replication) cell, resuming from checkpoints when a
// checkpoint directory is given. Results are ordered by setting then
// replication regardless of the number of jobs.
std::vector<ReplicationSummary> run_study(const StudyOptions& options,
                                          const std::function<void(const ReplicationSummary&)>& progress = {});

struct StudyTables {
  std::string parameter_errors;  // one row per replication and parameter
  std::string trait_mse;         // one row per replication and scoring source
  std::string fits;              // convergence diagnostics
  std::string summary;           // per setting and parameter: median |error|, RMSE
};

StudyTables format_study_tables(const std::vector<ReplicationSummary>& results);

}  // namespace ctdc
