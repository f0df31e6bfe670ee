#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctdc/dataset.hpp"
#include "ctdc/params.hpp"
#include "ctdc/quadrature.hpp"

namespace ctdc {

// Marginal log-likelihood sum_i log sum_q w_q prod_k L_ik(node_q), with the
// grid adapted to params.sigma.
double marginal_log_likelihood(const Dataset& data, const FixedParams& params, int points_per_dim = 21);

// Same, on an explicit grid. The grid factor must match params.sigma.
double marginal_log_likelihood(const Dataset& data, const FixedParams& params, const QuadratureGrid& grid);

// Unconstrained coordinates u = (beta_1..K, gamma_1..K, log l11, l21, log l22)
// where L = [[l11, 0], [l21, l22]] is the Cholesky factor of sigma. Requires
// sigma positive definite.
std::vector<double> to_unconstrained(const FixedParams& params);
FixedParams from_unconstrained(const std::vector<double>& u, const std::vector<std::string>& task_ids);
std::vector<std::string> unconstrained_names(const std::vector<std::string>& task_ids);

// Exact gradient of the discretized marginal log-likelihood in the
// unconstrained coordinates (Fisher identity on the quadrature posterior).
std::vector<double> marginal_score(const Dataset& data, const FixedParams& params, int points_per_dim = 21);

struct EmOptions {
  int points_per_dim = 21;
  std::size_t max_iters = 500;
  double loglik_tol = 1e-6;   // absolute increment
  double param_tol = 1e-6;    // max change in (beta, gamma, sigma)
  double score_tol = 1e-4;    // infinity norm of the score, unconstrained coords
  bool compute_standard_errors = false;
  // Squared extrapolation between EM steps, accepted only when the
  // log-likelihood does not drop; the trace stays monotone either way.
  bool accelerate = true;
};

struct FitResult {
  FixedParams params;
  std::optional<std::vector<double>> std_errors;  // aligned with params.names()
  std::string se_diagnostic;
  double final_loglik = 0.0;
  std::vector<double> loglik_trace;  // one entry per E-step
  std::size_t em_iterations = 0;
  bool converged = false;
  double score_norm = 0.0;
  int points_per_dim = 21;
};

// Method-of-moments start: beta = 0, pooled event rate for gamma,
// sigma = diag(1, 0.25).
FixedParams default_start(const Dataset& data);

FitResult fit_em(const Dataset& data, const FixedParams& init, const EmOptions& options = {});
FitResult fit_em(const Dataset& data, const EmOptions& options = {});

struct StandardErrors {
  std::optional<std::vector<double>> values;  // aligned with FixedParams::names()
  std::string diagnostic;                     // why values are absent
};

// Central differences of the score in unconstrained coordinates give the
// observed information; sigma SEs follow by the delta method.
StandardErrors standard_errors(const Dataset& data, const FixedParams& params_hat, int points_per_dim = 21);

struct CorrelationInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  bool flagged = false;  // more than 10% of refits failed
  std::vector<double> draws;
};

// Person-level nonparametric bootstrap with refits warm-started at the fitted
// parameters; 95% percentile interval. Requires at least 200 replicates.
CorrelationInterval correlation_with_ci(const FitResult& fit, const Dataset& data, std::size_t bootstrap_reps,
                                        std::uint64_t seed, const EmOptions& options = {}, std::size_t jobs = 1);

// Linear-interpolation sample quantile (type 7) of unsorted data.
double sample_quantile(std::vector<double> values, double prob);

}  // namespace ctdc
