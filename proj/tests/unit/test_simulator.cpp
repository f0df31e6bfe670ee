#include <cmath>
#include <map>

#include "ctdc/error.hpp"
#include "ctdc/params.hpp"
#include "ctdc/simulator.hpp"
#include "ctdc/task.hpp"
#include "doctest.h"

using namespace ctdc;
using doctest::Approx;

namespace {

struct Moments {
  double m1 = 0, m2 = 0, v1 = 0, v2 = 0, c = 0;
};

Moments sample_moments(const TraitCovariance& s, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  std::vector<TraitPair> x(n);
  for (auto& t : x) t = sample_traits(s, rng);
  Moments m;
  for (const auto& t : x) {
    m.m1 += t.theta / n;
    m.m2 += t.tau / n;
  }
  for (const auto& t : x) {
    m.v1 += (t.theta - m.m1) * (t.theta - m.m1) / (n - 1);
    m.v2 += (t.tau - m.m2) * (t.tau - m.m2) / (n - 1);
    m.c += (t.theta - m.m1) * (t.tau - m.m2) / (n - 1);
  }
  return m;
}

}  // namespace

TEST_CASE("trait draws match the prior") {
  const int n = 100000;
  Moments m = sample_moments({1.0, 0.0, 1.0}, n, 1);
  CHECK(std::abs(m.m1) < 3 / std::sqrt(n));
  CHECK(std::abs(m.m2) < 3 / std::sqrt(n));
  // var of the sample variance of a normal is 2 s^4 / (n - 1)
  CHECK(std::abs(m.v1 - 1.0) < 3 * std::sqrt(2.0 / n));
  CHECK(std::abs(m.v2 - 1.0) < 3 * std::sqrt(2.0 / n));
  CHECK(std::abs(m.c) < 3 / std::sqrt(n));

  m = sample_moments({2.18, 0.0, 0.11}, n, 2);
  CHECK(std::abs(m.v1 - 2.18) < 3 * 2.18 * std::sqrt(2.0 / n));
  CHECK(std::abs(m.v2 - 0.11) < 3 * 0.11 * std::sqrt(2.0 / n));

  const double s12 = 0.25 * std::sqrt(2.18 * 0.11);
  m = sample_moments({2.18, s12, 0.11}, n, 3);
  const double r = m.c / std::sqrt(m.v1 * m.v2);
  // se of a sample correlation is about (1 - rho^2) / sqrt(n)
  CHECK(std::abs(r - 0.25) < 3 * (1 - 0.0625) / std::sqrt(n));
}

TEST_CASE("very high competency follows the effective path") {
  Rng rng = make_rng(5, 0);
  const auto sim = simulate_record(builtin_task("tickets-task1"), {1e6, 0.0}, {1.54, -1.73}, rng, 500);
  CHECK_FALSE(sim.truncated);
  std::vector<int> states;
  for (const auto& e : sim.record.events) states.push_back(e.state.value);
  CHECK(states == std::vector<int>{11, 12, 14, 16, 21});
}

TEST_CASE("gaps are exponential with the ground intensity") {
  Rng rng = make_rng(6, 0);
  const auto& t2 = builtin_task("tickets-task2");
  double sum = 0;
  std::size_t count = 0;
  while (count < 100000) {
    const auto rec = simulate_record(t2, {-2.0, 0.0}, {0.0, 0.0}, rng, 500).record;
    for (std::size_t n = 1; n < rec.events.size() && count < 100000; ++n, ++count) {
      sum += rec.events[n].time - rec.events[n - 1].time;
    }
  }
  const double mean = sum / count;
  CHECK(std::abs(mean - 1.0) < 3.0 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("uniform choice at the first screen") {
  Rng rng = make_rng(7, 0);
  const auto& t2 = builtin_task("tickets-task2");
  std::map<int, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto rec = simulate_record(t2, {0.0, 0.0}, {0.0, 0.0}, rng, 1).record;
    ++counts[rec.events.front().state.value];
  }
  REQUIRE(counts.size() == 3);
  CHECK(counts.count(1));
  CHECK(counts.count(2));
  CHECK(counts.count(12));
  double chi2 = 0;
  for (const auto& [s, c] : counts) chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
  CHECK(chi2 < 9.2103);  // chi-square(2) at 0.99
}

TEST_CASE("records are valid and truncation is flagged") {
  Rng rng = make_rng(8, 0);
  const auto& t2 = builtin_task("tickets-task2");
  for (int i = 0; i < 300; ++i) {
    const auto sim = simulate_record(t2, {-1.0, 0.5}, {0.5, -1.0}, rng, 500);
    REQUIRE_NOTHROW(replay(t2, sim.record));
    CHECK(sim.record.events.front().time > 0.0);
    CHECK(t2.is_terminal(sim.record.events.back().state) != sim.truncated);
  }
  const auto cut = simulate_record(t2, {-5.0, 0.0}, {0.0, 0.0}, rng, 3);
  CHECK(cut.record.events.size() <= 3);
  if (!t2.is_terminal(cut.record.events.back().state)) CHECK(cut.truncated);
}

TEST_CASE("fixed first-action time") {
  Rng rng = make_rng(9, 0);
  FirstActionModel fixed;
  fixed.kind = FirstActionModel::Kind::fixed;
  fixed.fixed_seconds = 2.5;
  const auto sim = simulate_record(builtin_task("tickets-task1"), {0, 0}, {1.5, -1.7}, rng, 500, fixed);
  CHECK(sim.record.events.front().time == 2.5);
}

TEST_CASE("cohorts") {
  SimulationConfig cfg;
  cfg.num_persons = 1;
  cfg.tasks = {builtin_task("tickets-task1")};
  cfg.params = reference_ticket_params().select({0});
  cfg.seed = 11;
  const auto one = simulate_cohort(cfg);
  CHECK(one.person_ids.size() == 1);
  CHECK(one.traits.size() == 1);
  CHECK(one.records.size() == 1);

  cfg.num_persons = 50;
  cfg.tasks = {builtin_task("tickets-task1"), builtin_task("tickets-task2")};
  cfg.params = reference_ticket_params();
  const auto a = simulate_cohort(cfg);
  const auto b = simulate_cohort(cfg);
  CHECK(a.records == b.records);
  CHECK(a.traits == b.traits);
  CHECK(a.records.size() == 100);
  CHECK(a.records[0].task_id == "tickets-task1");
  CHECK(a.records[1].task_id == "tickets-task2");
  CHECK(a.records[0].person_id == a.records[1].person_id);

  cfg.seed = 12;
  CHECK_FALSE(simulate_cohort(cfg).records == a.records);

  // parameters are matched to tasks by id
  cfg.seed = 11;
  const auto c = simulate_cohort(cfg);
  cfg.params = reference_ticket_params().select({1, 0});
  CHECK(simulate_cohort(cfg).records == c.records);
  cfg.params = reference_ticket_params().select({0});
  CHECK_THROWS_AS(simulate_cohort(cfg), Error);
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a = make_rng(1, 2, 3), b = make_rng(1, 2, 3), c = make_rng(1, 2, 4), d = make_rng(1, 3, 3);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("simulation settings") {
  const auto s = simulation_settings();
  REQUIRE(s.size() == 6);
  CHECK(s[0].num_persons == 100);
  CHECK(s[3].num_persons == 400);
  CHECK(s[0].rho == -0.25);
  CHECK(s[4].rho == 0.0);
  CHECK(s[5].rho == 0.25);
  const FixedParams p = setting_params(find_setting("S6"));
  CHECK(p.sigma.s12 == Approx(0.25 * std::sqrt(2.18 * 0.11)));
  CHECK(p.betas == std::vector<double>{1.54, 1.68});
  CHECK(p.gammas == std::vector<double>{-1.73, -1.37});
  CHECK_THROWS_AS(find_setting("S7"), Error);
}
