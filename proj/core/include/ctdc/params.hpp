#pragma once

#include <string>
#include <vector>

#include "ctdc/process_model.hpp"
#include "ctdc/quadrature.hpp"

namespace ctdc {

// Fixed (structural) parameters: per-task easiness and baseline
// log-intensity, plus the trait covariance. Task order follows task_ids.
struct FixedParams {
  std::vector<std::string> task_ids;
  std::vector<double> betas;
  std::vector<double> gammas;
  TraitCovariance sigma;

  std::size_t num_tasks() const noexcept { return task_ids.size(); }
  TaskParams task(std::size_t k) const { return {betas.at(k), gammas.at(k)}; }
  std::size_t task_index(const std::string& task_id) const;  // throws if absent

  // Flat view (beta_1..K, gamma_1..K, s11, s12, s22) with matching names.
  std::vector<double> flatten() const;
  std::vector<std::string> names() const;

  // Parameters for a subset of tasks, keeping sigma.
  FixedParams select(const std::vector<std::size_t>& tasks) const;

  void check() const;  // sizes consistent, values finite, sigma PSD
};

// Reference MML estimates for the two TICKETS tasks (N = 392).
FixedParams reference_ticket_params();

// One cell of the simulation design: sample size and trait correlation, with
// sigma_12 = rho * sqrt(sigma_11 sigma_22).
struct SimulationSetting {
  std::string name;
  std::size_t num_persons = 0;
  double rho = 0.0;
};

std::vector<SimulationSetting> simulation_settings();
const SimulationSetting& find_setting(const std::string& name);
FixedParams setting_params(const SimulationSetting& setting);

}  // namespace ctdc
