#include <benchmark/benchmark.h>

#include "ctdc/estimator.hpp"
#include "ctdc/process_model.hpp"
#include "ctdc/scoring.hpp"
#include "ctdc/simulator.hpp"

using namespace ctdc;

namespace {

struct Cohort {
  std::vector<TaskDefinition> tasks;
  SimulatedCohort sim;
  Dataset data;
};

Cohort make(std::size_t n, std::uint64_t seed) {
  const FixedParams p = reference_ticket_params();
  Cohort c;
  for (const auto& id : p.task_ids) c.tasks.push_back(builtin_task(id));
  SimulationConfig cfg;
  cfg.num_persons = n;
  cfg.tasks = c.tasks;
  cfg.params = p;
  cfg.seed = seed;
  c.sim = simulate_cohort(cfg);
  c.data = Dataset(c.tasks, c.sim.complete_records(), c.sim.person_ids);
  return c;
}

void BM_ReferenceLikelihood(benchmark::State& state) {
  const Cohort c = make(50, 1);
  const FixedParams p = reference_ticket_params();
  for (auto _ : state) {
    double s = 0.0;
    for (const auto& r : c.sim.records) {
      const std::size_t k = p.task_index(r.task_id);
      s += conditional_log_likelihood(r, c.tasks[k], {0.3, -0.1}, p.task(k));
    }
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * c.sim.records.size());
}
BENCHMARK(BM_ReferenceLikelihood);

void BM_MarginalLikelihood(benchmark::State& state) {
  const Cohort c = make(400, 2);
  const FixedParams p = reference_ticket_params();
  const int points = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(marginal_log_likelihood(c.data, p, points));
}
BENCHMARK(BM_MarginalLikelihood)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);

void BM_Score(benchmark::State& state) {
  const Cohort c = make(400, 3);
  const FixedParams p = reference_ticket_params();
  for (auto _ : state) benchmark::DoNotOptimize(marginal_score(c.data, p));
}
BENCHMARK(BM_Score)->Unit(benchmark::kMillisecond);

void BM_FitEm(benchmark::State& state) {
  const Cohort c = make(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(fit_em(c.data).final_loglik);
}
BENCHMARK(BM_FitEm)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_ScoreEap(benchmark::State& state) {
  const Cohort c = make(400, 5);
  const FixedParams p = reference_ticket_params();
  for (auto _ : state) benchmark::DoNotOptimize(score_persons(c.data, p).size());
}
BENCHMARK(BM_ScoreEap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
