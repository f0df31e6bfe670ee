#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctdc/process_model.hpp"

namespace ctdc {

struct Column {
  std::string name;
  std::vector<double> values;
};

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
};

struct RegressionResult {
  std::vector<Coefficient> coefficients;  // intercept first
  double r_squared = 0.0;
  std::size_t n = 0;
  double residual_sd = 0.0;
};

// Least squares of y on an intercept plus `covariates`. Throws Error(data) on
// length mismatch, too few observations, a constant response or a rank
// deficient design.
RegressionResult ols(const std::vector<double>& y, const std::vector<Column>& covariates);

// R^2 only; same checks as ols.
double r_squared(const std::vector<double>& y, const std::vector<Column>& covariates);

struct R2Difference {
  std::string label;
  double estimate = 0.0;  // R^2(a) - R^2(b) on the full sample
  double lower = 0.0;
  double upper = 0.0;
  std::size_t replicates = 0;
  std::size_t failures = 0;  // resamples with a rank deficient design
};

// A response with two designs; all columns indexed by person.
struct DesignPair {
  std::vector<double> y;
  std::vector<Column> a;
  std::vector<Column> b;
};

struct BootstrapOptions {
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  double max_failure_fraction = 0.1;
};

// Person-level percentile bootstrap of R^2(a) - R^2(b): rows are resampled
// with replacement and both models refit on each resample.
R2Difference r2_difference_ci(const std::vector<double>& y, const std::vector<Column>& a,
                              const std::vector<Column>& b, const BootstrapOptions& options = {});

// General form: `design` maps resampled person indices to the pair of designs
// (for example after refitting the measurement model on the resample).
R2Difference r2_difference_ci(std::size_t num_persons, const std::function<DesignPair(std::span<const std::size_t>)>& design,
                              const BootstrapOptions& options = {});

// Inputs for the eight criterion models, aligned by person.
struct ValidationInputs {
  std::vector<double> criterion;
  std::optional<std::vector<TraitPair>> joint_traits;  // M1-M3
  std::optional<std::vector<TraitPair>> task1_traits;  // M4
  std::optional<std::vector<TraitPair>> task2_traits;  // M5
  std::optional<std::vector<double>> outcome1;         // M6, M8
  std::optional<std::vector<double>> outcome2;         // M7, M8
};

struct ValidationOptions {
  std::vector<std::string> models = {"M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8"};
  std::vector<std::pair<std::string, std::string>> differences = {
      {"M3", "M1"}, {"M3", "M4"}, {"M3", "M5"}, {"M4", "M6"}, {"M5", "M7"}, {"M3", "M8"}};
  BootstrapOptions bootstrap;
  // Full-refit mode: recompute the inputs on each bootstrap resample. When
  // empty the inputs are resampled as fixed rows.
  std::function<ValidationInputs(std::span<const std::size_t>)> refit;
};

struct ModelFit {
  std::string name;
  std::string formula;
  RegressionResult result;
};

struct ValidationReport {
  std::vector<ModelFit> models;
  std::vector<R2Difference> differences;
};

// Covariates of a named model; throws Error(data) when its inputs are missing.
std::vector<Column> model_design(const std::string& model, const ValidationInputs& inputs);
std::string model_formula(const std::string& model);

ValidationReport run_validation_suite(const ValidationInputs& inputs, const ValidationOptions& options = {});

}  // namespace ctdc
