#pragma once

#include <string>
#include <vector>

#include "ctdc/params.hpp"
#include "ctdc/process_model.hpp"
#include "ctdc/record.hpp"
#include "ctdc/task.hpp"

namespace ctdc::test {

// Mismatches between a bundled task and the hand-typed reference tables
// (reachable sets, effectiveness values and screen attributes).
std::vector<std::string> compare_with_tables(const TaskDefinition& task);

// Every action sequence of tickets-style tasks up to `max_len` actions,
// enumerated through the automaton. mass[L-1] is the total probability of
// sequences that either stopped at a terminal state within L actions or have
// exactly L actions; each path probability is exp of the choice part of
// conditional_log_likelihood.
struct Enumeration {
  std::vector<double> mass;
  std::size_t sequences = 0;
};
Enumeration enumerate_sequences(const TaskDefinition& task, double theta, double beta, int max_len);

// Marginal log-likelihood of one person by composite Gauss-Legendre
// integration over whitened traits on [-10, 10]^2. The integrand re-derives
// the choice sets by replaying the automaton and is checked against the
// reference likelihood before use.
double brute_force_person_loglik(const std::vector<ProcessRecord>& records, const std::vector<TaskDefinition>& tasks,
                                 const FixedParams& params);

// Posterior mean and standard deviations of one person's traits, same method.
struct PosteriorMoments {
  TraitPair mean;
  TraitPair sd;
};
PosteriorMoments brute_force_posterior(const std::vector<ProcessRecord>& records, const std::vector<TaskDefinition>& tasks,
                                       const FixedParams& params);

// E Z^k for a standard normal.
double normal_moment(int k);

// Simple regression by the textbook sums of squares.
struct SimpleFit {
  double intercept;
  double slope;
  double r_squared;
};
SimpleFit simple_regression(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ctdc::test
