#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctdc/analysis.hpp"
#include "ctdc/estimator.hpp"
#include "ctdc/params.hpp"
#include "ctdc/record.hpp"
#include "ctdc/scoring.hpp"
#include "ctdc/simulator.hpp"
#include "ctdc/task.hpp"

namespace ctdc {

std::string read_text_file(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_text_file(const std::filesystem::path& path, std::string_view text);

// ---- event logs -----------------------------------------------------------

struct Reject {
  std::string person_id;
  std::string task_id;
  std::size_t line = 0;  // first source line of the group
  std::string reason;
};

struct LogParseOptions {
  bool keep_incomplete = false;
};

struct ParsedLogs {
  std::vector<std::string> person_ids;  // every person in the file, first appearance
  std::vector<ProcessRecord> records;
  std::vector<Reject> rejects;     // invalid groups
  std::vector<Reject> incomplete;  // valid but never reached a terminal state
};

// Canonical long format: person_id, task_id, time, state_id. The first row of
// each (person, task) group is the initial state at time 0. Invalid groups
// are reported, not fatal; an unknown task_id throws Error(data).
ParsedLogs parse_logs(std::string_view csv, const std::vector<TaskDefinition>& tasks,
                      const LogParseOptions& options = {});

std::string write_logs(std::span<const ProcessRecord> records, const std::vector<TaskDefinition>& tasks);

// Descriptive layout with a person column "StID", a "Time" column and one
// column per task attribute (the TICKETS screens). Each row is matched to the
// unique state whose attributes agree; a slash-separated attribute such as
// "1/2/3/4/5" matches any of its members.
ParsedLogs convert_descriptive_logs(std::string_view csv, const TaskDefinition& task,
                                    const LogParseOptions& options = {});

std::string format_rejects(const ParsedLogs& parsed);

// ---- parameters -----------------------------------------------------------

struct FitProvenance {
  bool converged = false;
  double final_loglik = 0.0;
  std::size_t em_iterations = 0;
  double score_norm = 0.0;
  std::optional<std::vector<double>> std_errors;  // aligned with FixedParams::names()
  std::string se_diagnostic;
  std::size_t num_persons = 0;
};

struct ParamsFile {
  FixedParams params;
  int points_per_dim = 21;
  std::optional<FitProvenance> fit;
};

std::string params_to_json(const ParamsFile& file);
ParamsFile params_from_json(std::string_view text);
void save_params(const std::filesystem::path& path, const ParamsFile& file);
ParamsFile load_params(const std::filesystem::path& path);

ParamsFile make_params_file(const FitResult& fit, std::size_t num_persons);

// ---- person-level tables --------------------------------------------------

std::string write_scores(const std::vector<TraitEstimate>& scores);
std::vector<TraitEstimate> parse_scores(std::string_view csv);

struct OutcomeRow {
  std::string person_id;
  std::string task_id;
  bool success = false;
};
std::string write_outcomes(const std::vector<OutcomeRow>& rows);
std::vector<OutcomeRow> parse_outcomes(std::string_view csv);

struct CriterionRow {
  std::string person_id;
  double value = 0.0;
};
std::string write_criterion(const std::vector<CriterionRow>& rows);
std::vector<CriterionRow> parse_criterion(std::string_view csv);

struct TruthRow {
  std::string person_id;
  TraitPair traits;
};
std::string write_truth(const std::vector<TruthRow>& rows);
std::vector<TruthRow> parse_truth(std::string_view csv);

// ---- run configuration ----------------------------------------------------

// JSON object; every key is optional except where a command needs it.
// Relative paths are resolved against the directory of the config file.
struct RunConfig {
  std::vector<std::string> tasks;
  std::optional<std::filesystem::path> params;
  std::optional<std::filesystem::path> logs;
  std::optional<std::string> setting;
  std::optional<std::size_t> persons;
  std::optional<double> rho;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> max_steps;
  std::optional<FirstActionModel> first_action;
  EmOptions em;
  ScoringOptions scoring;
  BootstrapOptions bootstrap;
};

// Throws Error(schema) naming the offending key, or the line for syntax errors.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Resolves each entry of config.tasks (builtin name or path).
std::vector<TaskDefinition> config_tasks(const RunConfig& config);

}  // namespace ctdc
