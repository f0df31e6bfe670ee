#include "ctdc/process_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ctdc/error.hpp"

namespace ctdc {

std::vector<double> choice_probabilities(std::span<const Candidate> candidates, double theta, double beta) {
  if (candidates.empty()) throw_usage("choice_probabilities: empty candidate set");
  const double a = beta + theta;
  std::vector<double> p(candidates.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    p[i] = a * candidates[i].value;
    top = std::max(top, p[i]);
  }
  double total = 0.0;
  for (double& x : p) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : p) x /= total;
  return p;
}

double ground_intensity(double tau, double gamma) {
  if (!std::isfinite(tau) || !std::isfinite(gamma)) throw_usage("ground_intensity: non-finite input");
  return std::exp(gamma + tau);
}

double timing_log_likelihood(std::size_t num_events, double active_span, double log_rate) {
  if (num_events < 2) return 0.0;
  return static_cast<double>(num_events - 1) * log_rate - active_span * std::exp(log_rate);
}

double conditional_log_likelihood(const ProcessRecord& record, const TaskDefinition& task, TraitPair traits,
                                  TaskParams params) {
  if (record.events.empty()) throw_data("conditional_log_likelihood: record has no events");
  replay(task, record);

  double total = 0.0;
  HistoryState h = initial_history(task);
  for (const Event& e : record.events) {
    const auto cands = candidates(task, h);
    const auto p = choice_probabilities(cands, traits.theta, params.beta);
    const auto it = std::find_if(cands.begin(), cands.end(), [&](const Candidate& c) { return c.state == e.state; });
    total += std::log(p[static_cast<std::size_t>(it - cands.begin())]);
    h = advance(task, h, e.state);
  }

  const double rate = ground_intensity(traits.tau, params.gamma);
  for (std::size_t n = 0; n + 1 < record.events.size(); ++n) {
    const double gap = record.events[n + 1].time - record.events[n].time;
    total += std::log(rate) - gap * rate;
  }
  return total;
}

RecordSummary summarize(const ProcessRecord& record) {
  if (record.events.empty()) throw_data("summarize: record has no events");
  RecordSummary s;
  s.num_actions = record.events.size();
  s.total_duration = record.events.back().time - record.initial_time;
  if (s.num_actions >= 2) {
    s.avg_time_per_action =
        (record.events.back().time - record.events.front().time) / static_cast<double>(s.num_actions - 1);
  }
  return s;
}

ChoiceTerm choice_term(const ChoiceSituation& s, double a) {
  // values are ascending, so the max of a*V sits at one of the ends
  const double top = std::max(a * s.values.front(), a * s.values.back());
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (double v : s.values) {
    const double w = std::exp(a * v - top);
    z += w;
    m1 += w * v;
    m2 += w * v * v;
  }
  m1 /= z;
  m2 /= z;
  return {a * s.chosen - top - std::log(z), s.chosen - m1, -(m2 - m1 * m1)};
}

double choice_log_probability(const ChoiceSituation& s, double a) {
  const double top = std::max(a * s.values.front(), a * s.values.back());
  double z = 0.0;
  for (double v : s.values) z += std::exp(a * v - top);
  return a * s.chosen - top - std::log(z);
}

CompiledRecord compile_record(const ProcessRecord& record, const TaskDefinition& task) {
  replay(task, record);
  std::map<ChoiceSituation, int> counts;
  HistoryState h = initial_history(task);
  for (const Event& e : record.events) {
    const auto cands = candidates(task, h);
    ChoiceSituation s;
    s.values.reserve(cands.size());
    for (const Candidate& c : cands) {
      s.values.push_back(c.value);
      if (c.state == e.state) s.chosen = c.value;
    }
    std::sort(s.values.begin(), s.values.end());
    ++counts[std::move(s)];
    h = advance(task, h, e.state);
  }
  CompiledRecord out;
  out.situations.assign(counts.begin(), counts.end());
  out.num_events = record.events.size();
  if (!record.events.empty()) out.active_span = record.events.back().time - record.events.front().time;
  return out;
}

double compiled_log_likelihood(const CompiledRecord& record, TraitPair traits, TaskParams params) {
  double total = 0.0;
  for (const auto& [s, count] : record.situations) {
    total += count * choice_log_probability(s, params.beta + traits.theta);
  }
  return total + timing_log_likelihood(record.num_events, record.active_span, params.gamma + traits.tau);
}

}  // namespace ctdc
