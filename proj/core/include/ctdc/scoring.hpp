#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctdc/dataset.hpp"
#include "ctdc/params.hpp"
#include "ctdc/process_model.hpp"

namespace ctdc {

struct TraitEstimate {
  std::string person_id;
  TraitPair eap;
  TraitPair posterior_sd;
  std::optional<TraitPair> map;
};

struct ScoringOptions {
  int points_per_dim = 41;
  bool compute_map = false;
  std::size_t jobs = 1;
};

// EAP (and optionally MAP) for every person in the dataset, in dataset order.
// params must list the dataset's tasks in the same order.
std::vector<TraitEstimate> score_persons(const Dataset& data, const FixedParams& params,
                                         const ScoringOptions& options = {});

// EAP for one person on a grid adapted to params.sigma.
TraitEstimate score_eap(const Dataset& data, std::size_t person, const FixedParams& params,
                        int points_per_dim = 41);

// Posterior mode by Newton ascent in whitened coordinates z (traits = L z),
// started at `start`. Throws Error(convergence) after 100 iterations.
TraitPair score_map(const Dataset& data, std::size_t person, const FixedParams& params, TraitPair start);

// Log posterior kernel sum_k log L_ik(traits) - z'z/2 at traits = L z.
double log_posterior_whitened(const Dataset& data, std::size_t person, const FixedParams& params, double z1,
                              double z2);

}  // namespace ctdc
