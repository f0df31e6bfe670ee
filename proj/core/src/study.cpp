#include "ctdc/study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "ctdc/csv.hpp"
#include "ctdc/error.hpp"
#include "ctdc/io.hpp"
#include "ctdc/parallel.hpp"
#include "json.hpp"

namespace ctdc {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

FitResult fit_or_fail(const Dataset& data, const EmOptions& em) {
  try {
    return fit_em(data, em);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::convergence) throw;
    FitResult failed;
    failed.params = default_start(data);
    for (auto* v : {&failed.params.betas, &failed.params.gammas}) {
      std::fill(v->begin(), v->end(), std::numeric_limits<double>::quiet_NaN());
    }
    failed.converged = false;
    return failed;
  }
}

std::vector<TraitEstimate> score_or_empty(const Dataset& data, const FitResult& fit, int points) {
  if (!std::isfinite(fit.params.betas.front())) return {};
  ScoringOptions so;
  so.points_per_dim = points;
  return score_persons(data, fit.params, so);
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t study_seed, const std::string& setting, std::size_t replication) {
  Rng rng = make_rng(study_seed, fnv1a(setting), replication);
  return rng();
}

ReplicationRun run_replication(const SimulationSetting& setting, std::size_t replication, const StudyOptions& options) {
  ReplicationRun run;
  run.setting = setting;
  run.replication = replication;
  run.truth = setting_params(setting);

  std::vector<TaskDefinition> tasks;
  for (const auto& id : run.truth.task_ids) tasks.push_back(builtin_task(id));

  SimulationConfig cfg;
  cfg.num_persons = setting.num_persons;
  cfg.tasks = tasks;
  cfg.params = run.truth;
  cfg.seed = replication_seed(options.seed, setting.name, replication);
  cfg.max_steps = options.max_steps;
  run.cohort = simulate_cohort(cfg);

  const auto records = run.cohort.complete_records();
  run.joint = Dataset(tasks, records, run.cohort.person_ids);
  run.task1 = run.joint.select_tasks({0});
  run.task2 = run.joint.select_tasks({1});

  run.fit_joint = fit_or_fail(run.joint, options.em);
  run.fit_task1 = fit_or_fail(run.task1, options.em);
  run.fit_task2 = fit_or_fail(run.task2, options.em);

  run.scores_joint = score_or_empty(run.joint, run.fit_joint, options.scoring_points);
  run.scores_task1 = score_or_empty(run.task1, run.fit_task1, options.scoring_points);
  run.scores_task2 = score_or_empty(run.task2, run.fit_task2, options.scoring_points);
  return run;
}

TraitMse trait_mse(const std::vector<TraitEstimate>& scores, const std::vector<TraitPair>& truth) {
  if (scores.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  if (scores.size() != truth.size()) throw_usage("trait_mse: scores and truth differ in length");
  TraitMse m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double a = scores[i].eap.theta - truth[i].theta;
    const double b = scores[i].eap.tau - truth[i].tau;
    m.theta += a * a;
    m.tau += b * b;
  }
  m.theta /= static_cast<double>(scores.size());
  m.tau /= static_cast<double>(scores.size());
  return m;
}

ReplicationSummary summarize_run(const ReplicationRun& run) {
  ReplicationSummary s;
  s.setting = run.setting.name;
  s.num_persons = run.setting.num_persons;
  s.rho = run.setting.rho;
  s.replication = run.replication;
  s.names = run.truth.names();
  s.truth = run.truth.flatten();
  s.estimate = run.fit_joint.params.flatten();
  s.converged = run.fit_joint.converged && run.fit_task1.converged && run.fit_task2.converged;
  s.em_iterations = run.fit_joint.em_iterations;
  s.final_loglik = run.fit_joint.final_loglik;
  s.truncated = run.cohort.num_truncated();
  s.joint = trait_mse(run.scores_joint, run.cohort.traits);
  s.task1 = trait_mse(run.scores_task1, run.cohort.traits);
  s.task2 = trait_mse(run.scores_task2, run.cohort.traits);
  return s;
}

namespace {

using nlohmann::json;

// JSON has no NaN; store non-finite values as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num(const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); }

}  // namespace

std::string summary_to_json(const ReplicationSummary& s) {
  json j;
  j["setting"] = s.setting;
  j["num_persons"] = s.num_persons;
  j["rho"] = s.rho;
  j["replication"] = s.replication;
  j["seed"] = s.seed;
  j["names"] = s.names;
  j["truth"] = json::array();
  j["estimate"] = json::array();
  for (double v : s.truth) j["truth"].push_back(num(v));
  for (double v : s.estimate) j["estimate"].push_back(num(v));
  j["converged"] = s.converged;
  j["em_iterations"] = s.em_iterations;
  j["final_loglik"] = num(s.final_loglik);
  j["truncated"] = s.truncated;
  j["mse"] = {{"joint", {num(s.joint.theta), num(s.joint.tau)}},
              {"task1", {num(s.task1.theta), num(s.task1.tau)}},
              {"task2", {num(s.task2.theta), num(s.task2.tau)}}};
  return j.dump() + "\n";
}

ReplicationSummary summary_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ReplicationSummary s;
    s.setting = j.at("setting").get<std::string>();
    s.num_persons = j.at("num_persons").get<std::size_t>();
    s.rho = j.at("rho").get<double>();
    s.replication = j.at("replication").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.names = j.at("names").get<std::vector<std::string>>();
    for (const auto& v : j.at("truth")) s.truth.push_back(num(v));
    for (const auto& v : j.at("estimate")) s.estimate.push_back(num(v));
    s.converged = j.at("converged").get<bool>();
    s.em_iterations = j.at("em_iterations").get<std::size_t>();
    s.final_loglik = num(j.at("final_loglik"));
    s.truncated = j.at("truncated").get<std::size_t>();
    const json& m = j.at("mse");
    s.joint = {num(m.at("joint")[0]), num(m.at("joint")[1])};
    s.task1 = {num(m.at("task1")[0]), num(m.at("task1")[1])};
    s.task2 = {num(m.at("task2")[0]), num(m.at("task2")[1])};
    return s;
  } catch (const json::exception& e) {
    throw_schema(std::string("checkpoint: ") + e.what());
  }
}

std::vector<ReplicationSummary> run_study(const StudyOptions& options,
                                          const std::function<void(const ReplicationSummary&)>& progress) {
  std::vector<SimulationSetting> settings;
  for (const auto& name : options.settings) settings.push_back(find_setting(name));
  const std::size_t R = options.replications;
  std::vector<ReplicationSummary> results(settings.size() * R);
  std::mutex progress_mutex;

  parallel_for(results.size(), options.jobs, [&](std::size_t cell) {
    const SimulationSetting& setting = settings[cell / R];
    const std::size_t rep = cell % R;
    const std::uint64_t seed = replication_seed(options.seed, setting.name, rep);
    std::optional<std::filesystem::path> checkpoint;
    if (options.checkpoint_dir) {
      checkpoint = *options.checkpoint_dir / (setting.name + "-" + std::to_string(rep) + ".json");
    }
    bool restored = false;
    if (checkpoint && std::filesystem::exists(*checkpoint)) {
      try {
        ReplicationSummary s = summary_from_json(read_text_file(*checkpoint));
        if (s.seed == seed && s.setting == setting.name && s.replication == rep) {
          results[cell] = std::move(s);
          restored = true;
        }
      } catch (const Error&) {
        // stale or partial checkpoint; recompute
      }
    }
    if (!restored) {
      ReplicationSummary s = summarize_run(run_replication(setting, rep, options));
      s.seed = seed;
      if (checkpoint) {
        const auto tmp = checkpoint->string() + ".tmp";
        write_text_file(tmp, summary_to_json(s));
        std::filesystem::rename(tmp, *checkpoint);
      }
      results[cell] = std::move(s);
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(results[cell]);
    }
  });
  return results;
}

StudyTables format_study_tables(const std::vector<ReplicationSummary>& results) {
  StudyTables t;
  t.parameter_errors = "setting,num_persons,rho,replication,parameter,truth,estimate,error\n";
  t.trait_mse = "setting,num_persons,rho,replication,source,mse_theta,mse_tau\n";
  t.fits = "setting,num_persons,rho,replication,seed,converged,em_iterations,final_loglik,truncated_records\n";
  t.summary = "setting,num_persons,rho,quantity,replications,mean,median_abs_error,rmse\n";

  for (const auto& s : results) {
    const std::string n = std::to_string(s.num_persons);
    const std::string rho = format_double(s.rho);
    const std::string rep = std::to_string(s.replication);
    for (std::size_t p = 0; p < s.names.size(); ++p) {
      t.parameter_errors += csv_row({s.setting, n, rho, rep, s.names[p], format_double(s.truth[p]),
                                     format_double(s.estimate[p]), format_double(s.estimate[p] - s.truth[p])});
    }
    const std::pair<const char*, const TraitMse*> sources[] = {{"joint", &s.joint}, {"task1", &s.task1}, {"task2", &s.task2}};
    for (const auto& [name, m] : sources) {
      t.trait_mse += csv_row({s.setting, n, rho, rep, name, format_double(m->theta), format_double(m->tau)});
    }
    t.fits += csv_row({s.setting, n, rho, rep, std::to_string(s.seed), s.converged ? "1" : "0",
                       std::to_string(s.em_iterations), format_double(s.final_loglik), std::to_string(s.truncated)});
  }

  // Per-setting aggregates in order of first appearance.
  std::vector<std::string> order;
  for (const auto& s : results) {
    if (std::find(order.begin(), order.end(), s.setting) == order.end()) order.push_back(s.setting);
  }
  for (const auto& name : order) {
    std::vector<const ReplicationSummary*> cell;
    for (const auto& s : results) {
      if (s.setting == name) cell.push_back(&s);
    }
    const auto& first = *cell.front();
    const std::string n = std::to_string(first.num_persons);
    const std::string rho = format_double(first.rho);
    for (std::size_t p = 0; p < first.names.size(); ++p) {
      std::vector<double> errors;
      for (const auto* s : cell) {
        const double e = s->estimate[p] - s->truth[p];
        if (std::isfinite(e)) errors.push_back(e);
      }
      if (errors.empty()) {
        t.summary += csv_row({name, n, rho, first.names[p], "0", "", "", ""});
        continue;
      }
      double sum = 0.0, sq = 0.0;
      std::vector<double> abs_err;
      for (double e : errors) {
        sum += e;
        sq += e * e;
        abs_err.push_back(std::abs(e));
      }
      const double k = static_cast<double>(errors.size());
      t.summary += csv_row({name, n, rho, first.names[p], std::to_string(errors.size()), format_double(sum / k),
                            format_double(sample_quantile(abs_err, 0.5)), format_double(std::sqrt(sq / k))});
    }
    const std::pair<const char*, double TraitMse::*> comps[] = {{"theta", &TraitMse::theta}, {"tau", &TraitMse::tau}};
    const std::pair<const char*, TraitMse ReplicationSummary::*> srcs[] = {
        {"joint", &ReplicationSummary::joint}, {"task1", &ReplicationSummary::task1}, {"task2", &ReplicationSummary::task2}};
    for (const auto& [cname, comp] : comps) {
      for (const auto& [sname, src] : srcs) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto* s : cell) {
          const double v = (s->*src).*comp;
          if (std::isfinite(v)) {
            sum += v;
            ++count;
          }
        }
        t.summary += csv_row({name, n, rho, std::string("mse_") + cname + "[" + sname + "]", std::to_string(count),
                              count ? format_double(sum / static_cast<double>(count)) : "", "", ""});
      }
    }
  }
  return t;
}

}  // namespace ctdc
