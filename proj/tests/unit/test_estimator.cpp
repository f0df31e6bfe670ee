#include <algorithm>
#include <cmath>

#include "cohorts.hpp"
#include "ctdc/error.hpp"
#include "ctdc/estimator.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ctdc;
using doctest::Approx;
using test::make_cohort;
using test::make_record;

namespace {

std::vector<TaskDefinition> tasks_of(const FixedParams& p) {
  std::vector<TaskDefinition> t;
  for (const auto& id : p.task_ids) t.push_back(builtin_task(id));
  return t;
}

// Profile maximum likelihood of beta at theta = 0 by golden section.
double profile_beta(const std::vector<ProcessRecord>& recs, const TaskDefinition& task) {
  auto f = [&](double b) {
    double s = 0;
    for (const auto& r : recs) s += conditional_log_likelihood(r, task, {0, 0}, {b, 0});
    return s;
  };
  double lo = -5, hi = 8;
  const double g = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo), f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-9) {
    if (f1 < f2) {
      lo = x1, x1 = x2, f1 = f2, x2 = lo + g * (hi - lo), f2 = f(x2);
    } else {
      hi = x2, x2 = x1, f2 = f1, x1 = hi - g * (hi - lo), f1 = f(x1);
    }
  }
  return (lo + hi) / 2;
}

}  // namespace

TEST_CASE("marginal likelihood matches direct 2-D integration") {
  for (const FixedParams& p : {reference_ticket_params(), setting_params(find_setting("S6"))}) {
    const auto c = make_cohort(p, 6, 21);
    const auto tasks = tasks_of(p);
    const auto recs = c.sim.complete_records();
    for (const auto& pid : c.sim.person_ids) {
      std::vector<ProcessRecord> mine;
      for (const auto& r : recs) {
        if (r.person_id == pid) mine.push_back(r);
      }
      if (mine.empty()) continue;
      const Dataset one(tasks, mine);
      const double brute = test::brute_force_person_loglik(mine, tasks, p);
      const double lib = marginal_log_likelihood(one, p, 41);
      CHECK(lib == Approx(brute).epsilon(1e-9));
      CHECK(marginal_log_likelihood(one, p, 21) == Approx(brute).epsilon(1e-7));
    }
  }
}

TEST_CASE("degenerate priors") {
  const auto& t2 = builtin_task("tickets-task2");
  FixedParams p;
  p.task_ids = {"tickets-task2"};
  p.betas = {0.0};
  p.gammas = {-1.0};
  p.sigma = {0.0, 0.0, 0.0};
  const std::vector<ProcessRecord> single = {test::student17_record()};
  CHECK(marginal_log_likelihood(Dataset({t2}, single), p, 21) ==
        Approx(conditional_log_likelihood(single[0], t2, {0, 0}, {0.0, -1.0})).epsilon(1e-14));
  // a non-terminated record carries no information
  const std::vector<ProcessRecord> open = {make_record("1", "tickets-task2", {{3.0, 2}})};
  CHECK(std::abs(marginal_log_likelihood(Dataset({t2}, open), p, 21)) < 1e-14);

  p.betas = {1.68};
  p.gammas = {-1.37};
  const std::vector<ProcessRecord> t1 = {test::student17_record()};
  CHECK(marginal_log_likelihood(Dataset({t2}, t1), p, 21) ==
        Approx(conditional_log_likelihood(t1[0], t2, {0, 0}, {1.68, -1.37})).epsilon(1e-13));
}

TEST_CASE("explicit grid overload") {
  const FixedParams p = reference_ticket_params();
  const auto c = make_cohort(p, 20, 2);
  const auto g = QuadratureGrid::adapted(p.sigma, 21);
  CHECK(marginal_log_likelihood(c.data, p, g) == Approx(marginal_log_likelihood(c.data, p, 21)).epsilon(1e-12));
  const auto other = QuadratureGrid::adapted({1.0, 0.0, 1.0}, 21);
  CHECK_THROWS_AS(marginal_log_likelihood(c.data, p, other), Error);
}

TEST_CASE("true parameters dominate a perturbed beta") {
  const FixedParams truth = setting_params(find_setting("S4"));
  FixedParams off = truth;
  off.betas[0] += 0.5;
  int wins = 0;
  for (int r = 0; r < 50; ++r) {
    const auto c = make_cohort(truth, 400, 1000 + r);
    wins += marginal_log_likelihood(c.data, truth) > marginal_log_likelihood(c.data, off);
  }
  CHECK(wins >= 45);
}

TEST_CASE("unconstrained coordinates round trip") {
  const FixedParams p = setting_params(find_setting("S3"));
  const auto u = to_unconstrained(p);
  REQUIRE(u.size() == 7);
  const FixedParams q = from_unconstrained(u, p.task_ids);
  CHECK(q.betas[1] == Approx(p.betas[1]));
  CHECK(q.sigma.s11 == Approx(p.sigma.s11));
  CHECK(q.sigma.s12 == Approx(p.sigma.s12));
  CHECK(q.sigma.s22 == Approx(p.sigma.s22));
  CHECK(unconstrained_names(p.task_ids).size() == 7);
  FixedParams singular = p;
  singular.sigma = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(to_unconstrained(singular), Error);
}

TEST_CASE("score agrees with central differences") {
  const FixedParams p = setting_params(find_setting("S1"));
  const auto c = make_cohort(p, 100, 5);
  const auto u = to_unconstrained(p);
  const auto s = marginal_score(c.data, p);
  for (std::size_t j = 0; j < u.size(); ++j) {
    auto up = u, dn = u;
    const double h = 1e-5;
    up[j] += h;
    dn[j] -= h;
    const double fd = (marginal_log_likelihood(c.data, from_unconstrained(up, p.task_ids)) -
                       marginal_log_likelihood(c.data, from_unconstrained(dn, p.task_ids))) /
                      (2 * h);
    CHECK(s[j] == Approx(fd).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("EM is monotone and converges to a stationary point") {
  const FixedParams truth = setting_params(find_setting("S4"));
  const auto c = make_cohort(truth, 400, 77);
  EmOptions opts;
  opts.compute_standard_errors = true;
  const FitResult fit = fit_em(c.data, opts);
  CHECK(fit.converged);
  REQUIRE(fit.loglik_trace.size() >= 2);
  for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - 1e-8);
  CHECK(fit.final_loglik == Approx(marginal_log_likelihood(c.data, fit.params)).epsilon(1e-12));
  CHECK(fit.score_norm < 1e-3);

  const auto est = fit.params.flatten();
  const auto tv = truth.flatten();
  REQUIRE(fit.std_errors);
  for (std::size_t j = 0; j < est.size(); ++j) {
    CHECK((*fit.std_errors)[j] > 0);
    CHECK(std::abs(est[j] - tv[j]) < 4.5 * (*fit.std_errors)[j]);
  }

  // same optimum from the generating values
  const FitResult from_truth = fit_em(c.data, truth);
  CHECK(from_truth.final_loglik == Approx(fit.final_loglik).epsilon(1e-9));
  for (std::size_t j = 0; j < est.size(); ++j) CHECK(from_truth.params.flatten()[j] == Approx(est[j]).epsilon(1e-3));

  // plain EM without extrapolation lands in the same place
  EmOptions plain;
  plain.accelerate = false;
  plain.max_iters = 5000;
  const FitResult slow = fit_em(c.data, plain);
  CHECK(slow.converged);
  CHECK(slow.final_loglik == Approx(fit.final_loglik).epsilon(1e-9));
}

TEST_CASE("near-degenerate trait variance recovers the fixed-trait fit") {
  FixedParams p = reference_ticket_params();
  p.sigma = {1e-4, 0.0, 1e-4};
  const auto c = make_cohort(p, 400, 31);
  const FitResult fit = fit_em(c.data);
  const auto recs = c.sim.complete_records();
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<ProcessRecord> mine;
    for (const auto& r : recs) {
      if (r.task_id == p.task_ids[k]) mine.push_back(r);
    }
    const double b = profile_beta(mine, builtin_task(p.task_ids[k]));
    CHECK(std::abs(fit.params.betas[k] - b) < 0.1);
  }
  CHECK(fit.params.sigma.s11 < 0.1);
  CHECK(fit.params.sigma.s22 < 0.01);
}

TEST_CASE("single-task fits") {
  const auto c = make_cohort(reference_ticket_params(), 200, 8);
  const Dataset t2 = c.data.select_tasks({1});
  const FitResult fit = fit_em(t2);
  CHECK(fit.converged);
  CHECK(fit.params.task_ids == std::vector<std::string>{"tickets-task2"});
  CHECK(std::abs(fit.params.betas[0] - 1.68) < 0.5);
  CHECK(std::abs(fit.params.gammas[0] + 1.37) < 0.15);
}

TEST_CASE("standard errors shrink with sample size") {
  const FixedParams truth = setting_params(find_setting("S5"));
  const auto small = make_cohort(truth, 400, 41);
  const auto big = make_cohort(truth, 800, 42);
  const auto a = standard_errors(small.data, fit_em(small.data).params);
  const auto b = standard_errors(big.data, fit_em(big.data).params);
  REQUIRE(a.values);
  REQUIRE(b.values);
  for (std::size_t j = 0; j < 4; ++j) {
    const double ratio = (*a.values)[j] / (*b.values)[j];
    CHECK(ratio == Approx(std::sqrt(2.0)).epsilon(0.2));
  }
}

TEST_CASE("standard errors are calibrated against replication spread") {
  const FixedParams truth = setting_params(find_setting("S4"));
  std::vector<double> beta1, se;
  for (int r = 0; r < 20; ++r) {
    const auto c = make_cohort(truth, 400, 500 + r);
    EmOptions o;
    o.compute_standard_errors = true;
    const FitResult f = fit_em(c.data, o);
    if (!f.std_errors) continue;
    beta1.push_back(f.params.betas[0]);
    se.push_back((*f.std_errors)[0]);
  }
  REQUIRE(beta1.size() >= 18);
  double mean = 0, var = 0;
  for (double b : beta1) mean += b / beta1.size();
  for (double b : beta1) var += (b - mean) * (b - mean) / (beta1.size() - 1);
  const double sd = std::sqrt(var);
  int ok = 0;
  for (double s : se) ok += s / sd >= 0.5 && s / sd <= 2.0;
  CHECK(ok >= static_cast<int>(0.8 * se.size()));
  // same order as the reported N = 392 standard errors
  CHECK(mean == Approx(1.54).epsilon(0.1));
  for (double s : se) CHECK((s > 0.04 && s < 0.16));
}

TEST_CASE("boundary estimates withhold standard errors") {
  FixedParams p = reference_ticket_params();
  const auto c = make_cohort(p, 50, 9);
  p.sigma = {1.0, 1.0, 1.0};
  const auto se = standard_errors(c.data, p);
  CHECK_FALSE(se.values);
  CHECK_FALSE(se.diagnostic.empty());
}

TEST_CASE("correlation interval") {
  const auto c = make_cohort(setting_params(find_setting("S2")), 60, 3);
  FitResult fit = fit_em(c.data);
  CHECK_THROWS_AS(correlation_with_ci(fit, c.data, 50, 1), Error);

  const auto ci = correlation_with_ci(fit, c.data, 200, 1);
  CHECK(ci.estimate == Approx(fit.params.sigma.correlation()));
  CHECK(ci.replicates + ci.failures == 200);
  CHECK(ci.lower <= ci.upper);
  CHECK(ci.lower >= -1.0);
  CHECK(ci.upper <= 1.0);
  const auto again = correlation_with_ci(fit, c.data, 200, 1);
  CHECK(again.draws == ci.draws);

  fit.params.sigma.s12 = 0.0;
  CHECK(correlation_with_ci(fit, c.data, 200, 2).estimate == 0.0);
}

TEST_CASE("type 7 quantiles") {
  CHECK(sample_quantile({4, 1, 3, 2}, 0.25) == Approx(1.75));
  CHECK(sample_quantile({4, 1, 3, 2}, 0.5) == Approx(2.5));
  CHECK(sample_quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(sample_quantile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(sample_quantile({7}, 0.3) == 7.0);
}

TEST_CASE("fit preconditions") {
  const auto& t2 = builtin_task("tickets-task2");
  const Dataset empty({t2}, std::vector<ProcessRecord>{});
  CHECK_THROWS_AS(fit_em(empty), Error);
  const auto c = make_cohort(reference_ticket_params(), 20, 1);
  CHECK_THROWS_AS(fit_em(c.data, reference_ticket_params().select({1})), Error);
}
