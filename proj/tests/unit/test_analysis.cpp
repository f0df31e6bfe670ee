#include <cmath>
#include <random>

#include "cohorts.hpp"
#include "ctdc/analysis.hpp"
#include "ctdc/error.hpp"
#include "ctdc/estimator.hpp"
#include "ctdc/scoring.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ctdc;
using doctest::Approx;

TEST_CASE("four-point regression") {
  const std::vector<double> y{1, 2, 3, 4}, x{1, 2, 3, 5};
  const RegressionResult r = ols(y, {{"x", x}});
  const auto hand = test::simple_regression(x, y);
  REQUIRE(r.coefficients.size() == 2);
  CHECK(r.coefficients[0].name == "(Intercept)");
  CHECK(r.coefficients[1].name == "x");
  CHECK(std::abs(r.coefficients[1].estimate - 26.0 / 35.0) < 1e-12);
  CHECK(std::abs(r.coefficients[1].estimate - hand.slope) < 1e-12);
  CHECK(std::abs(r.coefficients[0].estimate - hand.intercept) < 1e-12);
  CHECK(std::abs(r.r_squared - 169.0 / 175.0) < 1e-12);
  CHECK(std::abs(r.r_squared - hand.r_squared) < 1e-12);
  CHECK(r.n == 4);
  // residual variance: SSE / (n - 2) with SSE = Syy (1 - R^2) = 5 * 6/175
  CHECK(r.residual_sd == Approx(std::sqrt(5.0 * 6.0 / 175.0 / 2.0)).epsilon(1e-12));
  const double se_slope = r.residual_sd / std::sqrt(35.0 / 4.0);
  CHECK(r.coefficients[1].std_error == Approx(se_slope).epsilon(1e-12));
  CHECK(r.coefficients[1].t_value == Approx(r.coefficients[1].estimate / se_slope).epsilon(1e-12));
  CHECK(r.coefficients[1].p_value > 0.0);
  CHECK(r.coefficients[1].p_value < 0.05);
}

TEST_CASE("trivial regressions") {
  const std::vector<double> y{3, 1, 4, 1, 5, 9, 2, 6};
  const auto self = ols(y, {{"y", y}});
  CHECK(self.r_squared == Approx(1.0).epsilon(1e-14));
  CHECK(self.coefficients[1].estimate == Approx(1.0).epsilon(1e-14));
  CHECK(ols(y, {}).r_squared == 0.0);
  CHECK(r_squared(y, {}) == 0.0);
}

TEST_CASE("regression input checks") {
  const std::vector<double> y{1, 2, 3, 4};
  auto kind = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::usage;
  };
  CHECK(kind([&] { ols(y, {{"x", {1, 2, 3}}}); }) == ErrorKind::data);
  CHECK(kind([&] { ols({1, 1, 1, 1}, {{"x", {1, 2, 3, 4}}}); }) == ErrorKind::data);
  CHECK(kind([&] { ols(y, {{"a", {1, 2, 3, 4}}, {"b", {2, 4, 6, 8}}}); }) == ErrorKind::data);
  CHECK(kind([&] { ols({1, 2}, {{"a", {1, 3}}}); }) == ErrorKind::data);
}

TEST_CASE("nested models never lose R^2") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 30 + rep % 20;
    std::vector<Column> cols;
    for (int j = 0; j < 4; ++j) {
      Column c{"x" + std::to_string(j), {}};
      for (std::size_t i = 0; i < n; ++i) c.values.push_back(n01(rng));
      cols.push_back(c);
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.3 * cols[0].values[i] + n01(rng);
    double prev = 0.0;
    for (std::size_t k = 1; k <= cols.size(); ++k) {
      const double r2 = r_squared(y, {cols.begin(), cols.begin() + k});
      CHECK(r2 >= prev - 1e-12);
      prev = r2;
    }
  }
}

TEST_CASE("R^2 differences") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  const std::size_t n = 200;
  std::vector<double> y(n);
  Column a{"a", {}}, noise{"noise", {}};
  for (std::size_t i = 0; i < n; ++i) {
    a.values.push_back(n01(rng));
    noise.values.push_back(n01(rng));
    y[i] = a.values[i] + n01(rng);
  }
  BootstrapOptions o;
  o.reps = 300;
  o.seed = 4;
  const R2Difference same = r2_difference_ci(y, {a}, {a}, o);
  CHECK(same.estimate == 0.0);
  CHECK(same.lower == 0.0);
  CHECK(same.upper == 0.0);

  const R2Difference nested = r2_difference_ci(y, {a, noise}, {a}, o);
  CHECK(nested.estimate >= 0.0);
  CHECK(nested.lower <= nested.estimate);
  CHECK(nested.upper >= nested.estimate);
  CHECK(nested.replicates == 300);

  const R2Difference big = r2_difference_ci(y, {a}, {noise}, o);
  CHECK(big.lower > 0.2);

  // reproducible, and independent of the number of jobs
  BootstrapOptions par = o;
  par.jobs = 3;
  const R2Difference p = r2_difference_ci(y, {a, noise}, {a}, par);
  CHECK(p.lower == nested.lower);
  CHECK(p.upper == nested.upper);
}

TEST_CASE("noise covariate interval covers zero at about the nominal rate") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  int covered = 0;
  const int meta = 40;
  for (int m = 0; m < meta; ++m) {
    const std::size_t n = 150;
    std::vector<double> y(n);
    Column a{"a", {}}, noise{"noise", {}};
    for (std::size_t i = 0; i < n; ++i) {
      a.values.push_back(n01(rng));
      noise.values.push_back(n01(rng));
      y[i] = a.values[i] + n01(rng);
    }
    BootstrapOptions o;
    o.reps = 200;
    o.seed = 100 + m;
    const auto d = r2_difference_ci(y, {a, noise}, {a}, o);
    // R^2 can only grow, so the interval touches zero from above
    covered += d.lower <= 1e-3;
  }
  CHECK(covered >= meta * 8 / 10);
}

TEST_CASE("model designs and formulas") {
  ValidationInputs in;
  in.criterion = {1, 2, 3, 4, 5};
  in.joint_traits = std::vector<TraitPair>{{1, 2}, {2, 1}, {3, 3}, {0, 1}, {2, 2}};
  CHECK(model_design("M1", in).size() == 1);
  CHECK(model_design("M3", in).size() == 2);
  CHECK(model_formula("M3") == "criterion ~ theta + tau");
  CHECK_THROWS_AS(model_design("M4", in), Error);
  CHECK_THROWS_AS(model_design("M9", in), Error);
}

TEST_CASE("criterion driven by competency favours M1 over M2") {
  const FixedParams p = setting_params(find_setting("S5"));
  const auto c = test::make_cohort(p, 300, 12);
  const auto scores = score_persons(c.data, p);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 80.0);
  ValidationInputs in;
  in.joint_traits.emplace();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    in.criterion.push_back(500 + 40 * c.sim.traits[i].theta + noise(rng));
    in.joint_traits->push_back(scores[i].eap);
  }
  ValidationOptions o;
  o.models = {"M1", "M2", "M3"};
  o.differences = {{"M3", "M1"}};
  o.bootstrap.reps = 200;
  const ValidationReport rep = run_validation_suite(in, o);
  REQUIRE(rep.models.size() == 3);
  CHECK(rep.models[0].result.r_squared > rep.models[1].result.r_squared);
  CHECK(rep.models[2].result.r_squared >= rep.models[0].result.r_squared);
  REQUIRE(rep.differences.size() == 1);
  CHECK(rep.differences[0].label == "M3-M1");
}

TEST_CASE("a criterion unrelated to anything explains little") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01;
  ValidationInputs in;
  in.joint_traits.emplace();
  in.outcome1.emplace();
  in.outcome2.emplace();
  for (int i = 0; i < 400; ++i) {
    in.criterion.push_back(n01(rng));
    in.joint_traits->push_back({n01(rng), n01(rng)});
    in.outcome1->push_back(n01(rng) > 0);
    in.outcome2->push_back(n01(rng) > 0.5);
  }
  ValidationOptions o;
  o.models = {"M1", "M2", "M3", "M6", "M7", "M8"};
  o.differences = {};
  const auto rep = run_validation_suite(in, o);
  // 95th percentile of a Beta(k/2, (n-k-1)/2) R^2 under the null is below 0.02 for k <= 2, n = 400
  for (const auto& m : rep.models) CHECK(m.result.r_squared < 0.02);
}
