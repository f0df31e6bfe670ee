#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ctdc::cli {

// Unset optionals fall back to the config file (when given), then to defaults.

struct SimulateArgs {
  std::string config;
  std::optional<std::string> setting;
  std::optional<std::size_t> persons;
  std::string params;
  std::vector<std::string> tasks;
  std::optional<double> rho;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps;
  std::string first_action;
  std::string out = "simulated";
  std::size_t jobs = 1;
};

struct FitArgs {
  std::string config;
  std::string logs;
  std::vector<std::string> tasks;
  std::string out = "params.json";
  std::string report;
  std::string init;
  std::string rejects;
  std::optional<int> points;
  std::optional<std::size_t> max_iters;
  bool standard_errors = false;
  bool keep_incomplete = false;
  std::size_t correlation_reps = 0;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

struct ScoreArgs {
  std::string config;
  std::string logs;
  std::string params;
  std::vector<std::string> tasks;
  std::string out = "scores.csv";
  std::optional<int> points;
  bool map = false;
  bool keep_incomplete = false;
  std::size_t jobs = 1;
};

struct SummarizeArgs {
  std::string logs;
  std::vector<std::string> tasks;
  std::string out = "summary.csv";
};

struct OutcomesArgs {
  std::string logs;
  std::vector<std::string> tasks;
  std::string out = "outcomes.csv";
};

struct RegressArgs {
  std::string criterion;
  std::string scores;
  std::string scores_task1;
  std::string scores_task2;
  std::string outcomes;
  std::string task1_id = "tickets-task1";
  std::string task2_id = "tickets-task2";
  std::vector<std::string> models;
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string out = "regress";
};

struct ReproArgs {
  std::string out = "sim-study";
  std::uint64_t seed = 20190417;
  std::size_t reps = 50;
  std::vector<std::string> settings;
  std::optional<int> points;
  std::size_t max_steps = 500;
  std::string checkpoints;
  bool no_checkpoints = false;
  std::size_t jobs = 1;
};

struct ValidateTaskArgs {
  std::vector<std::string> files;
};

struct ConvertArgs {
  std::string input;
  std::string task = "tickets-task2";
  std::string out = "logs.csv";
  std::string rejects;
};

int cmd_simulate(const SimulateArgs& args);
int cmd_fit(const FitArgs& args);
int cmd_score(const ScoreArgs& args);
int cmd_summarize(const SummarizeArgs& args);
int cmd_outcomes(const OutcomesArgs& args);
int cmd_regress(const RegressArgs& args);
int cmd_repro_sim_study(const ReproArgs& args);
int cmd_validate_task(const ValidateTaskArgs& args);
int cmd_convert_tickets(const ConvertArgs& args);

}  // namespace ctdc::cli
