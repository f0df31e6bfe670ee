#pragma once

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include "ctdc/record.hpp"
#include "ctdc/task.hpp"

namespace ctdc {

// Person latent traits: competency `theta` and log action-speed offset `tau`.
struct TraitPair {
  double theta = 0.0;
  double tau = 0.0;

  friend bool operator==(const TraitPair&, const TraitPair&) = default;
};

// Task-level parameters: easiness `beta` and baseline log-intensity `gamma`.
struct TaskParams {
  double beta = 0.0;
  double gamma = 0.0;
};

// Multinomial logit over the candidate set,
//   p_j = exp((beta + theta) V_j) / sum_i exp((beta + theta) V_i),
// evaluated with max-subtraction.
std::vector<double> choice_probabilities(std::span<const Candidate> candidates, double theta, double beta);

// Constant within-task event rate exp(gamma + tau), events per second.
double ground_intensity(double tau, double gamma);

// Log-likelihood of a record given T_1: choice terms for every event plus
// exponential gap densities for n = 1..m-1. The wait before the first event
// contributes nothing. Reference implementation that replays the automaton.
double conditional_log_likelihood(const ProcessRecord& record, const TaskDefinition& task, TraitPair traits,
                                  TaskParams params);

struct RecordSummary {
  std::size_t num_actions = 0;
  double total_duration = 0.0;                 // t_m, includes time to first action
  std::optional<double> avg_time_per_action;  // (t_m - t_1)/(m - 1); empty when m = 1
};

RecordSummary summarize(const ProcessRecord& record);

// One decision point reduced to what the likelihood needs: the candidate
// effectiveness values (ascending) and the value of the chosen candidate.
struct ChoiceSituation {
  std::vector<double> values;
  double chosen = 0.0;

  friend auto operator<=>(const ChoiceSituation&, const ChoiceSituation&) = default;
};

// log f for a situation at linear predictor a = beta + theta, and its first
// two derivatives in a.
struct ChoiceTerm {
  double value;
  double d1;
  double d2;
};
double choice_log_probability(const ChoiceSituation& s, double a);
ChoiceTerm choice_term(const ChoiceSituation& s, double a);

// Sufficient statistics of a record. The conditional log-likelihood equals
//   sum_s count_s * log f_s(beta + theta)
//   + (m - 1)(gamma + tau) - span * exp(gamma + tau)      (m >= 2).
struct CompiledRecord {
  std::vector<std::pair<ChoiceSituation, int>> situations;
  std::size_t num_events = 0;
  double active_span = 0.0;  // t_m - t_1
};

CompiledRecord compile_record(const ProcessRecord& record, const TaskDefinition& task);

double compiled_log_likelihood(const CompiledRecord& record, TraitPair traits, TaskParams params);

// Timing part (m-1) s - span e^s at s = gamma + tau.
double timing_log_likelihood(std::size_t num_events, double active_span, double log_rate);

}  // namespace ctdc
