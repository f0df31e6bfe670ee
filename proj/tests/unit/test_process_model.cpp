#include <cmath>
#include <random>

#include "ctdc/process_model.hpp"
#include "ctdc/simulator.hpp"
#include "ctdc/task.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace ctdc;
using doctest::Approx;
using test::make_record;

namespace {

std::vector<Candidate> first_screen() { return {{StateId(1), 0.0}, {StateId(2), 1.0}, {StateId(12), 0.0}}; }

}  // namespace

TEST_CASE("choice probabilities") {
  auto p = choice_probabilities(first_screen(), 0.0, 0.0);
  for (double v : p) CHECK(v == Approx(1.0 / 3.0).epsilon(1e-15));

  p = choice_probabilities(first_screen(), 0.0, 1.54);
  CHECK(p[1] == Approx(std::exp(1.54) / (std::exp(1.54) + 2.0)).epsilon(1e-14));
  CHECK(p[1] == Approx(0.6998).epsilon(1e-4));
  CHECK(p[0] == Approx(p[2]));

  p = choice_probabilities(first_screen(), 1e6, 0.0);
  CHECK(p[1] == 1.0);
  CHECK(p[0] == 0.0);
  p = choice_probabilities(first_screen(), -1e6, 0.0);
  CHECK(p[0] == Approx(0.5));
  CHECK(p[1] == 0.0);
  double sum = 0;
  for (double v : choice_probabilities(first_screen(), 3.7, -1.1)) sum += v;
  CHECK(sum == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("ground intensity") {
  CHECK(ground_intensity(0.0, -1.73) == Approx(0.1773).epsilon(1e-3));
  CHECK(1.0 / ground_intensity(0.0, -1.73) == Approx(5.641).epsilon(1e-3));
  CHECK(ground_intensity(1.73, -1.73) == 1.0);
  CHECK(ground_intensity(0.3, -1.37) == Approx(std::exp(-1.07)).epsilon(1e-15));
}

TEST_CASE("conditional log-likelihood of the student 17 record") {
  const auto& t2 = builtin_task("tickets-task2");
  const double a = 1.68, g = -1.37;
  const double ea = std::exp(a);
  const double choice = std::log(ea / (ea + 2)) + std::log(ea / (ea + 2)) + std::log(ea / (2 * ea + 1)) +
                        std::log(1.0 / (ea + 1));
  const double rate = std::exp(g);
  double timing = 0;
  for (double gap : {9.8, 10.0, 5.8}) timing += std::log(rate) - rate * gap;
  const double ll = conditional_log_likelihood(test::student17_record(), t2, {0.0, 0.0}, {a, g});
  CHECK(ll == Approx(choice + timing).epsilon(1e-13));

  const CompiledRecord c = compile_record(test::student17_record(), t2);
  CHECK(c.num_events == 4);
  CHECK(c.active_span == Approx(25.6));
  CHECK(compiled_log_likelihood(c, {0.0, 0.0}, {a, g}) == Approx(ll).epsilon(1e-13));
}

TEST_CASE("single action has no timing term") {
  const auto& t2 = builtin_task("tickets-task2");
  const auto r = make_record("p", "tickets-task2", {{4.0, 12}});
  const double ll = conditional_log_likelihood(r, t2, {0.5, 2.0}, {0.2, -1.0});
  const double a = 0.7, ea = std::exp(a);
  CHECK(ll == Approx(std::log(1.0 / (ea + 2))).epsilon(1e-14));
}

TEST_CASE("uniform choice part equals minus the log candidate counts") {
  const auto& t2 = builtin_task("tickets-task2");
  const auto r = make_record("p", "tickets-task2", {{1, 2}, {2, 7}, {3, 9}, {4, 10}, {5, 11}, {6, 21}});
  double expected = 0;
  HistoryState h = initial_history(t2);
  for (const auto& e : r.events) {
    expected -= std::log(static_cast<double>(candidates(t2, h).size()));
    h = advance(t2, h, e.state);
  }
  // gamma = tau = 0, unit gaps: timing is -(m - 1)
  const double ll = conditional_log_likelihood(r, t2, {0.0, 0.0}, {0.0, 0.0});
  CHECK(ll + 5.0 == Approx(expected).epsilon(1e-14));
}

TEST_CASE("choice terms and their derivatives") {
  ChoiceSituation s{{0.0, 0.0, 1.0, 1.0}, 1.0};
  for (double a : {-3.0, -0.2, 0.0, 0.9, 4.0, 40.0}) {
    const ChoiceTerm t = choice_term(s, a);
    CHECK(t.value == Approx(choice_log_probability(s, a)).epsilon(1e-14));
    const double h = 1e-5;
    const double d1 = (choice_log_probability(s, a + h) - choice_log_probability(s, a - h)) / (2 * h);
    const double d2 =
        (choice_log_probability(s, a + h) - 2 * choice_log_probability(s, a) + choice_log_probability(s, a - h)) / (h * h);
    CHECK(t.d1 == Approx(d1).epsilon(1e-6));
    CHECK(t.d2 == Approx(d2).epsilon(1e-3).scale(1e-3));
  }
  // saturated regime stays finite
  ChoiceSituation bad{{0.0, 1.0}, 0.0};
  CHECK(std::isfinite(choice_log_probability(bad, 1e6)));
  CHECK(choice_log_probability(bad, 1e6) == Approx(-1e6));
}

TEST_CASE("timing log-likelihood") {
  CHECK(timing_log_likelihood(1, 0.0, 0.3) == 0.0);
  CHECK(timing_log_likelihood(3, 10.0, -1.0) == Approx(2 * -1.0 - 10.0 * std::exp(-1.0)));
}

TEST_CASE("record summaries") {
  const RecordSummary s = summarize(test::student17_record());
  CHECK(s.num_actions == 4);
  CHECK(s.total_duration == Approx(32.9));
  REQUIRE(s.avg_time_per_action);
  CHECK(*s.avg_time_per_action == Approx(25.6 / 3.0).epsilon(1e-14));

  const RecordSummary one = summarize(make_record("p", "t", {{5.0, 2}}));
  CHECK(one.num_actions == 1);
  CHECK(one.total_duration == 5.0);
  CHECK_FALSE(one.avg_time_per_action);

  const RecordSummary two = summarize(make_record("p", "t", {{2.0, 2}, {7.0, 3}}));
  CHECK(two.num_actions == 2);
  CHECK(two.total_duration == 7.0);
  CHECK(*two.avg_time_per_action == 5.0);
}

TEST_CASE("compiled and reference likelihoods agree on simulated records") {
  const auto& t1 = builtin_task("tickets-task1");
  const auto& t2 = builtin_task("tickets-task2");
  Rng rng = make_rng(3, 0);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 200; ++i) {
    const TraitPair tr{1.5 * n01(rng), 0.3 * n01(rng)};
    const TaskParams p{1.5 + 0.3 * n01(rng), -1.5 + 0.2 * n01(rng)};
    const TaskDefinition& t = i % 2 ? t1 : t2;
    const auto rec = simulate_record(t, tr, p, rng, 300).record;
    const double ref = conditional_log_likelihood(rec, t, tr, p);
    CHECK(compiled_log_likelihood(compile_record(rec, t), tr, p) == Approx(ref).epsilon(1e-12));
  }
}
