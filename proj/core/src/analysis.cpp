#include "ctdc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "ctdc/error.hpp"
#include "ctdc/estimator.hpp"
#include "ctdc/parallel.hpp"
#include "ctdc/simulator.hpp"

namespace ctdc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LeastSquares {
  VectorXd beta;
  MatrixXd xtx_inv;
  double rss = 0.0;
  double tss = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;
};

LeastSquares solve(const std::vector<double>& y, const std::vector<Column>& covariates, bool need_cov) {
  const std::size_t n = y.size();
  const std::size_t p = covariates.size() + 1;
  for (const auto& c : covariates) {
    if (c.values.size() != n) throw_data("covariate '" + c.name + "' has a different length than the response");
  }
  if (n <= p) throw_data("regression needs more observations than columns");
  MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  VectorXd Y(static_cast<Eigen::Index>(n));
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    Y[ii] = y[i];
    mean += y[i];
    X(ii, 0) = 1.0;
    for (std::size_t j = 0; j < covariates.size(); ++j) X(ii, static_cast<Eigen::Index>(j + 1)) = covariates[j].values[i];
  }
  mean /= static_cast<double>(n);
  LeastSquares ls;
  ls.n = n;
  ls.p = p;
  for (double v : y) ls.tss += (v - mean) * (v - mean);
  if (!(ls.tss > 0.0)) throw_data("response is constant");

  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < p) throw_data("design matrix is rank deficient");
  ls.beta = qr.solve(Y);
  ls.rss = (Y - X * ls.beta).squaredNorm();
  if (need_cov) ls.xtx_inv = (X.transpose() * X).ldlt().solve(MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                                                  static_cast<Eigen::Index>(p)));
  return ls;
}

double r2_of(const LeastSquares& ls) {
  if (ls.p == 1) return 0.0;
  return std::clamp(1.0 - ls.rss / ls.tss, 0.0, 1.0);
}

template <class T>
std::vector<T> take(const std::vector<T>& v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v.at(i));
  return out;
}

std::vector<Column> take(const std::vector<Column>& cols, std::span<const std::size_t> idx) {
  std::vector<Column> out;
  for (const auto& c : cols) out.push_back({c.name, take(c.values, idx)});
  return out;
}

}  // namespace

RegressionResult ols(const std::vector<double>& y, const std::vector<Column>& covariates) {
  const LeastSquares ls = solve(y, covariates, true);
  RegressionResult out;
  out.n = ls.n;
  out.r_squared = r2_of(ls);
  const double df = static_cast<double>(ls.n - ls.p);
  const double sigma2 = ls.rss / df;
  out.residual_sd = std::sqrt(sigma2);
  boost::math::students_t dist(df);
  for (std::size_t j = 0; j < ls.p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    Coefficient c;
    c.name = j == 0 ? "(Intercept)" : covariates[j - 1].name;
    c.estimate = ls.beta[jj];
    c.std_error = std::sqrt(std::max(0.0, sigma2 * ls.xtx_inv(jj, jj)));
    if (c.std_error > 0.0) {
      c.t_value = c.estimate / c.std_error;
      c.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(c.t_value))), 0.0, 1.0);
    } else {
      c.t_value = c.estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
      c.p_value = c.estimate == 0.0 ? 1.0 : 0.0;
    }
    out.coefficients.push_back(c);
  }
  return out;
}

double r_squared(const std::vector<double>& y, const std::vector<Column>& covariates) {
  return r2_of(solve(y, covariates, false));
}

R2Difference r2_difference_ci(std::size_t num_persons,
                              const std::function<DesignPair(std::span<const std::size_t>)>& design,
                              const BootstrapOptions& options) {
  if (num_persons == 0) throw_data("bootstrap needs at least one person");
  if (options.reps == 0) throw_usage("bootstrap needs at least one replicate");
  std::vector<std::size_t> all(num_persons);
  for (std::size_t i = 0; i < num_persons; ++i) all[i] = i;
  const DesignPair full = design(all);
  R2Difference out;
  out.estimate = r_squared(full.y, full.a) - r_squared(full.y, full.b);
  out.replicates = options.reps;

  std::vector<double> draws(options.reps, std::numeric_limits<double>::quiet_NaN());
  parallel_for(options.reps, options.jobs, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, r, 0x52325f4349ull);
    std::uniform_int_distribution<std::size_t> pick(0, num_persons - 1);
    std::vector<std::size_t> idx(num_persons);
    for (auto& v : idx) v = pick(rng);
    try {
      const DesignPair d = design(idx);
      draws[r] = r_squared(d.y, d.a) - r_squared(d.y, d.b);
    } catch (const Error&) {
      // counted as a failed resample
    }
  });
  std::vector<double> ok;
  for (double d : draws) {
    if (std::isnan(d)) {
      ++out.failures;
    } else {
      ok.push_back(d);
    }
  }
  if (ok.empty() ||
      static_cast<double>(out.failures) > options.max_failure_fraction * static_cast<double>(options.reps)) {
    throw_data("too many bootstrap resamples produced a rank deficient design (" + std::to_string(out.failures) +
               " of " + std::to_string(options.reps) + ")");
  }
  out.lower = sample_quantile(ok, 0.025);
  out.upper = sample_quantile(ok, 0.975);
  return out;
}

R2Difference r2_difference_ci(const std::vector<double>& y, const std::vector<Column>& a,
                              const std::vector<Column>& b, const BootstrapOptions& options) {
  return r2_difference_ci(
      y.size(), [&](std::span<const std::size_t> idx) { return DesignPair{take(y, idx), take(a, idx), take(b, idx)}; },
      options);
}

namespace {

std::vector<double> component(const std::vector<TraitPair>& t, bool theta) {
  std::vector<double> out;
  out.reserve(t.size());
  for (const auto& p : t) out.push_back(theta ? p.theta : p.tau);
  return out;
}

template <class T>
const T& require(const std::optional<T>& v, const std::string& model, const char* what) {
  if (!v) throw_data("model " + model + " needs " + what);
  return *v;
}

ValidationInputs resample_inputs(const ValidationInputs& in, std::span<const std::size_t> idx) {
  ValidationInputs out;
  out.criterion = take(in.criterion, idx);
  if (in.joint_traits) out.joint_traits = take(*in.joint_traits, idx);
  if (in.task1_traits) out.task1_traits = take(*in.task1_traits, idx);
  if (in.task2_traits) out.task2_traits = take(*in.task2_traits, idx);
  if (in.outcome1) out.outcome1 = take(*in.outcome1, idx);
  if (in.outcome2) out.outcome2 = take(*in.outcome2, idx);
  return out;
}

}  // namespace

std::string model_formula(const std::string& model) {
  if (model == "M1") return "criterion ~ theta";
  if (model == "M2") return "criterion ~ tau";
  if (model == "M3") return "criterion ~ theta + tau";
  if (model == "M4") return "criterion ~ theta_task1 + tau_task1";
  if (model == "M5") return "criterion ~ theta_task2 + tau_task2";
  if (model == "M6") return "criterion ~ outcome_task1";
  if (model == "M7") return "criterion ~ outcome_task2";
  if (model == "M8") return "criterion ~ outcome_task1 + outcome_task2";
  throw_usage("unknown model " + model);
}

std::vector<Column> model_design(const std::string& model, const ValidationInputs& in) {
  const std::size_t n = in.criterion.size();
  auto sized = [&](std::vector<Column> cols) {
    for (const auto& c : cols) {
      if (c.values.size() != n) throw_data("model " + model + ": input '" + c.name + "' is not aligned with the criterion");
    }
    return cols;
  };
  if (model == "M1") return sized({{"theta", component(require(in.joint_traits, model, "joint trait estimates"), true)}});
  if (model == "M2") return sized({{"tau", component(require(in.joint_traits, model, "joint trait estimates"), false)}});
  if (model == "M3") {
    const auto& t = require(in.joint_traits, model, "joint trait estimates");
    return sized({{"theta", component(t, true)}, {"tau", component(t, false)}});
  }
  if (model == "M4") {
    const auto& t = require(in.task1_traits, model, "task-1 trait estimates");
    return sized({{"theta_task1", component(t, true)}, {"tau_task1", component(t, false)}});
  }
  if (model == "M5") {
    const auto& t = require(in.task2_traits, model, "task-2 trait estimates");
    return sized({{"theta_task2", component(t, true)}, {"tau_task2", component(t, false)}});
  }
  if (model == "M6") return sized({{"outcome_task1", require(in.outcome1, model, "task-1 outcomes")}});
  if (model == "M7") return sized({{"outcome_task2", require(in.outcome2, model, "task-2 outcomes")}});
  if (model == "M8") {
    return sized({{"outcome_task1", require(in.outcome1, model, "task-1 outcomes")},
                  {"outcome_task2", require(in.outcome2, model, "task-2 outcomes")}});
  }
  throw_usage("unknown model " + model);
}

ValidationReport run_validation_suite(const ValidationInputs& inputs, const ValidationOptions& options) {
  ValidationReport report;
  for (const auto& m : options.models) {
    report.models.push_back({m, model_formula(m), ols(inputs.criterion, model_design(m, inputs))});
  }
  for (const auto& [a, b] : options.differences) {
    model_design(a, inputs);
    model_design(b, inputs);
    auto design = [&](std::span<const std::size_t> idx) {
      const ValidationInputs in = options.refit ? options.refit(idx) : resample_inputs(inputs, idx);
      return DesignPair{in.criterion, model_design(a, in), model_design(b, in)};
    };
    R2Difference d = r2_difference_ci(inputs.criterion.size(), design, options.bootstrap);
    d.label = a + "-" + b;
    report.differences.push_back(std::move(d));
  }
  return report;
}

}  // namespace ctdc
