#include "ctdc/params.hpp"

#include <algorithm>
#include <cmath>

#include "ctdc/error.hpp"

namespace ctdc {

std::size_t FixedParams::task_index(const std::string& task_id) const {
  const auto it = std::find(task_ids.begin(), task_ids.end(), task_id);
  if (it == task_ids.end()) throw_data("parameters do not cover task '" + task_id + "'");
  return static_cast<std::size_t>(it - task_ids.begin());
}

std::vector<double> FixedParams::flatten() const {
  std::vector<double> out(betas);
  out.insert(out.end(), gammas.begin(), gammas.end());
  out.push_back(sigma.s11);
  out.push_back(sigma.s12);
  out.push_back(sigma.s22);
  return out;
}

std::vector<std::string> FixedParams::names() const {
  std::vector<std::string> out;
  for (const auto& id : task_ids) out.push_back("beta[" + id + "]");
  for (const auto& id : task_ids) out.push_back("gamma[" + id + "]");
  out.insert(out.end(), {"sigma11", "sigma12", "sigma22"});
  return out;
}

FixedParams FixedParams::select(const std::vector<std::size_t>& tasks) const {
  FixedParams out;
  out.sigma = sigma;
  for (std::size_t k : tasks) {
    out.task_ids.push_back(task_ids.at(k));
    out.betas.push_back(betas.at(k));
    out.gammas.push_back(gammas.at(k));
  }
  return out;
}

void FixedParams::check() const {
  if (task_ids.empty()) throw_usage("parameters: no tasks");
  if (betas.size() != task_ids.size() || gammas.size() != task_ids.size()) {
    throw_usage("parameters: beta/gamma sizes do not match the number of tasks");
  }
  for (double v : flatten()) {
    if (!std::isfinite(v)) throw_usage("parameters: non-finite value");
  }
  if (!sigma.is_psd()) throw_usage("parameters: sigma is not positive semidefinite");
}

FixedParams reference_ticket_params() {
  FixedParams p;
  p.task_ids = {"tickets-task1", "tickets-task2"};
  p.betas = {1.54, 1.68};
  p.gammas = {-1.73, -1.37};
  p.sigma = {2.18, -0.06, 0.11};
  return p;
}

std::vector<SimulationSetting> simulation_settings() {
  return {{"S1", 100, -0.25}, {"S2", 100, 0.0}, {"S3", 100, 0.25},
          {"S4", 400, -0.25}, {"S5", 400, 0.0}, {"S6", 400, 0.25}};
}

const SimulationSetting& find_setting(const std::string& name) {
  static const auto settings = simulation_settings();
  for (const auto& s : settings) {
    if (s.name == name) return s;
  }
  throw_usage("unknown simulation setting '" + name + "' (expected S1..S6)");
}

FixedParams setting_params(const SimulationSetting& setting) {
  FixedParams p = reference_ticket_params();
  p.sigma.s12 = setting.rho * std::sqrt(p.sigma.s11 * p.sigma.s22);
  return p;
}

}  // namespace ctdc
