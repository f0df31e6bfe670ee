#include "ctdc/simulator.hpp"

#include <cmath>

#include "ctdc/error.hpp"

namespace ctdc {

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32),
                    0x63746463u};
  return Rng(seq);
}

void SimulationConfig::check() const {
  if (num_persons < 1) throw_usage("simulation: num_persons must be >= 1");
  if (max_steps < 1) throw_usage("simulation: max_steps must be >= 1");
  if (tasks.empty()) throw_usage("simulation: no tasks");
  params.check();
  for (const auto& t : tasks) params.task_index(t.id());
  if (first_action.kind == FirstActionModel::Kind::fixed && !(first_action.fixed_seconds > 0.0)) {
    throw_usage("simulation: fixed first-action gap must be positive");
  }
}

TraitPair sample_traits(const TraitCovariance& sigma, Rng& rng) {
  const CholeskyFactor f = psd_cholesky(sigma);
  std::normal_distribution<double> normal;
  const double z1 = normal(rng);
  const double z2 = normal(rng);
  return f.apply(z1, z2);
}

SimulatedRecord simulate_record(const TaskDefinition& task, TraitPair traits, TaskParams params, Rng& rng,
                                std::size_t max_steps, const FirstActionModel& first_action) {
  if (max_steps < 1) throw_usage("simulate_record: max_steps must be >= 1");
  const double rate = ground_intensity(traits.tau, params.gamma);
  std::exponential_distribution<double> gap(rate);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SimulatedRecord out;
  out.record.task_id = task.id();
  HistoryState h = initial_history(task);
  double t = 0.0;
  while (!h.terminated) {
    if (out.record.events.size() >= max_steps) {
      out.truncated = true;
      break;
    }
    if (out.record.events.empty() && first_action.kind == FirstActionModel::Kind::fixed) {
      t += first_action.fixed_seconds;
    } else {
      // guard against a zero draw so times stay strictly increasing
      double d = gap(rng);
      while (!(d > 0.0)) d = gap(rng);
      t += d;
    }
    const auto cands = candidates(task, h);
    const auto p = choice_probabilities(cands, traits.theta, params.beta);
    const double u = unit(rng);
    std::size_t pick = 0;
    double cum = p[0];
    while (u >= cum && pick + 1 < p.size()) cum += p[++pick];
    const StateId next = cands[pick].state;
    out.record.events.push_back({t, next});
    h = advance(task, h, next);
  }
  return out;
}

std::size_t SimulatedCohort::num_truncated() const {
  std::size_t n = 0;
  for (bool b : truncated) n += b ? 1 : 0;
  return n;
}

std::vector<ProcessRecord> SimulatedCohort::complete_records() const {
  std::vector<ProcessRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!truncated[i]) out.push_back(records[i]);
  }
  return out;
}

SimulatedCohort simulate_cohort(const SimulationConfig& config) {
  config.check();
  SimulatedCohort cohort;
  cohort.person_ids.reserve(config.num_persons);
  cohort.traits.reserve(config.num_persons);
  for (std::size_t i = 0; i < config.num_persons; ++i) {
    Rng rng = make_rng(config.seed, i);
    const std::string pid = std::to_string(i + 1);
    const TraitPair traits = sample_traits(config.params.sigma, rng);
    cohort.person_ids.push_back(pid);
    cohort.traits.push_back(traits);
    for (const auto& task : config.tasks) {
      const TaskParams tp = config.params.task(config.params.task_index(task.id()));
      SimulatedRecord sim = simulate_record(task, traits, tp, rng, config.max_steps, config.first_action);
      sim.record.person_id = pid;
      cohort.records.push_back(std::move(sim.record));
      cohort.truncated.push_back(sim.truncated);
    }
  }
  return cohort;
}

}  // namespace ctdc
