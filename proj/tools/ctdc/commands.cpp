#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>

#include "ctdc/analysis.hpp"
#include "ctdc/csv.hpp"
#include "ctdc/dataset.hpp"
#include "ctdc/error.hpp"
#include "ctdc/estimator.hpp"
#include "ctdc/io.hpp"
#include "ctdc/parallel.hpp"
#include "ctdc/params.hpp"
#include "ctdc/scoring.hpp"
#include "ctdc/simulator.hpp"
#include "ctdc/study.hpp"
#include "ctdc/task.hpp"
#include "manifest.hpp"

namespace ctdc::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<TaskDefinition> resolve_tasks(const std::vector<std::string>& names) {
  const std::vector<std::string> list = names.empty() ? builtin_task_names() : names;
  std::vector<TaskDefinition> tasks;
  std::set<std::string> seen;
  for (const auto& n : list) {
    TaskDefinition t = resolve_task(n);
    if (!seen.insert(t.id()).second) throw_usage("task '" + t.id() + "' given twice");
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<std::string> ids_of(const std::vector<TaskDefinition>& tasks) {
  std::vector<std::string> ids;
  for (const auto& t : tasks) ids.push_back(t.id());
  return ids;
}

// Restricts params to `tasks` (in that order); every task must be present.
FixedParams align_params(const FixedParams& params, const std::vector<TaskDefinition>& tasks) {
  std::vector<std::size_t> idx;
  for (const auto& t : tasks) {
    if (std::find(params.task_ids.begin(), params.task_ids.end(), t.id()) == params.task_ids.end()) {
      throw_usage("parameters have no entry for task '" + t.id() + "'");
    }
    idx.push_back(params.task_index(t.id()));
  }
  return params.select(idx);
}

// Tasks named on the command line, or else the tasks listed in the params.
std::vector<TaskDefinition> tasks_for_params(const FixedParams& params, const std::vector<std::string>& names) {
  if (!names.empty()) return resolve_tasks(names);
  std::vector<TaskDefinition> tasks;
  for (const auto& id : params.task_ids) tasks.push_back(resolve_task(id));
  return tasks;
}

struct LoadedLogs {
  ParsedLogs parsed;
  std::size_t other_tasks = 0;  // valid records of tasks outside the selection
};

// Parses against the selected tasks plus the builtins, so logs that also hold
// records of other builtin tasks still load; then keeps only the selection.
LoadedLogs read_logs(const fs::path& path, const std::vector<TaskDefinition>& tasks, bool keep_incomplete) {
  LoadedLogs out;
  const std::string text = read_text_file(path);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return out;

  std::vector<TaskDefinition> known = tasks;
  std::set<std::string> selected;
  for (const auto& t : tasks) selected.insert(t.id());
  for (const auto& name : builtin_task_names()) {
    if (!selected.count(name)) known.push_back(builtin_task(name));
  }

  LogParseOptions opts;
  opts.keep_incomplete = keep_incomplete;
  ParsedLogs all = parse_logs(text, known, opts);
  out.parsed.person_ids = std::move(all.person_ids);
  for (auto& r : all.records) {
    if (selected.count(r.task_id)) out.parsed.records.push_back(std::move(r));
    else ++out.other_tasks;
  }
  for (auto& r : all.rejects) {
    if (selected.count(r.task_id)) out.parsed.rejects.push_back(std::move(r));
  }
  for (auto& r : all.incomplete) {
    if (selected.count(r.task_id)) out.parsed.incomplete.push_back(std::move(r));
  }
  return out;
}

void report_logs(const LoadedLogs& logs, bool incomplete_kept, const std::string& rejects_path) {
  const auto& p = logs.parsed;
  std::cerr << "logs: " << p.records.size() << " records, " << p.person_ids.size() << " persons, "
            << p.rejects.size() << " rejected";
  if (!incomplete_kept) std::cerr << ", " << p.incomplete.size() << " incomplete (excluded)";
  if (logs.other_tasks) std::cerr << ", " << logs.other_tasks << " of other tasks (ignored)";
  std::cerr << "\n";
  for (std::size_t i = 0; i < p.rejects.size() && i < 5; ++i) {
    const auto& r = p.rejects[i];
    std::cerr << "  line " << r.line << " (" << r.person_id << ", " << r.task_id << "): " << r.reason << "\n";
  }
  if (p.rejects.size() > 5) std::cerr << "  ...\n";
  if (!rejects_path.empty()) write_text_file(rejects_path, format_rejects(p));
}

std::optional<RunConfig> maybe_config(const std::string& path, Manifest& manifest) {
  if (path.empty()) return std::nullopt;
  manifest.add_input(path);
  return load_config(path);
}

FirstActionModel parse_first_action(const std::string& s) {
  FirstActionModel m;
  if (s == "exponential") return m;
  if (s.rfind("fixed:", 0) == 0) {
    m.kind = FirstActionModel::Kind::fixed;
    m.fixed_seconds = parse_double(s.substr(6), "--first-action");
    if (!(m.fixed_seconds >= 0.0)) throw_usage("--first-action: fixed time must be non-negative");
    return m;
  }
  throw_usage("--first-action must be 'exponential' or 'fixed:<seconds>'");
}

ordered_json params_json(const FixedParams& p) {
  ordered_json j;
  const auto names = p.names();
  const auto values = p.flatten();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
  return j;
}

ordered_json em_json(const EmOptions& em) {
  return {{"points_per_dim", em.points_per_dim}, {"max_iters", em.max_iters},   {"loglik_tol", em.loglik_tol},
          {"param_tol", em.param_tol},           {"score_tol", em.score_tol},   {"standard_errors", em.compute_standard_errors},
          {"accelerate", em.accelerate}};
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return format_double(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const SimulateArgs& args) {
  Manifest manifest("simulate");
  const auto cfg = maybe_config(args.config, manifest);

  std::optional<std::string> setting_name = args.setting;
  if (!setting_name && cfg) setting_name = cfg->setting;

  std::vector<std::string> task_names = args.tasks;
  if (task_names.empty() && cfg) task_names = cfg->tasks;

  FixedParams params;
  std::optional<std::size_t> persons;
  std::string params_source;
  if (setting_name) {
    const SimulationSetting& s = find_setting(*setting_name);
    params = setting_params(s);
    persons = s.num_persons;
    params_source = "setting " + s.name;
  } else {
    std::string ppath = args.params;
    if (ppath.empty() && cfg && cfg->params) ppath = cfg->params->string();
    if (!ppath.empty()) {
      params = load_params(ppath).params;
      manifest.add_input(ppath);
      params_source = ppath;
    } else {
      params = reference_ticket_params();
      params_source = "reference";
    }
  }
  if (args.persons) persons = args.persons;
  else if (cfg && cfg->persons) persons = cfg->persons;
  if (!persons) throw_usage("simulate needs --setting or --persons");

  std::optional<double> rho = args.rho;
  if (!rho && cfg) rho = cfg->rho;
  if (rho) {
    if (!(std::abs(*rho) <= 1.0)) throw_usage("--rho must lie in [-1, 1]");
    params.sigma.s12 = *rho * std::sqrt(params.sigma.s11 * params.sigma.s22);
  }

  std::vector<TaskDefinition> tasks = tasks_for_params(params, task_names);
  params = align_params(params, tasks);
  params.check();

  const std::uint64_t seed = args.seed ? *args.seed : (cfg && cfg->seed ? *cfg->seed : 1);
  const std::size_t reps = args.reps ? *args.reps : (cfg && cfg->replications ? *cfg->replications : 1);
  const std::size_t max_steps = args.max_steps ? *args.max_steps : (cfg && cfg->max_steps ? *cfg->max_steps : 500);
  FirstActionModel first_action;
  if (!args.first_action.empty()) first_action = parse_first_action(args.first_action);
  else if (cfg && cfg->first_action) first_action = *cfg->first_action;
  if (reps == 0) throw_usage("--reps must be at least 1");

  const std::string stream = setting_name ? find_setting(*setting_name).name : "custom";
  const fs::path out = args.out;
  fs::create_directories(out);

  std::vector<std::size_t> truncated(reps, 0);
  std::vector<fs::path> cohort_files(reps), truth_files(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.csv", r + 1);
    cohort_files[r] = out / ("cohort_" + std::string(name));
    truth_files[r] = out / ("truth_" + std::string(name));
  }

  parallel_for(reps, args.jobs, [&](std::size_t r) {
    SimulationConfig sc;
    sc.num_persons = *persons;
    sc.tasks = tasks;
    sc.params = params;
    sc.seed = replication_seed(seed, stream, r);
    sc.max_steps = max_steps;
    sc.first_action = first_action;
    const SimulatedCohort cohort = simulate_cohort(sc);
    std::vector<TruthRow> truth;
    for (std::size_t i = 0; i < cohort.person_ids.size(); ++i) truth.push_back({cohort.person_ids[i], cohort.traits[i]});
    write_text_file(cohort_files[r], write_logs(cohort.records, tasks));
    write_text_file(truth_files[r], write_truth(truth));
    truncated[r] = cohort.num_truncated();
  });

  std::size_t total_truncated = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    manifest.add_output(cohort_files[r]);
    manifest.add_output(truth_files[r]);
    total_truncated += truncated[r];
  }
  std::cerr << "simulate: " << reps << " cohort(s) of " << *persons << " persons in " << out.string() << "\n";
  if (total_truncated) {
    std::cerr << "simulate: " << total_truncated << " record(s) stopped at " << max_steps
              << " steps without reaching a terminal state\n";
  }

  auto& c = manifest.config();
  c["setting"] = setting_name ? ordered_json(*setting_name) : ordered_json(nullptr);
  c["params_source"] = params_source;
  c["tasks"] = ids_of(tasks);
  c["params"] = params_json(params);
  c["persons"] = *persons;
  c["replications"] = reps;
  c["max_steps"] = max_steps;
  c["first_action"] = first_action.kind == FirstActionModel::Kind::fixed
                          ? "fixed:" + format_double(first_action.fixed_seconds)
                          : std::string("exponential");
  c["stream"] = stream;
  c["jobs"] = args.jobs;
  c["truncated_records"] = total_truncated;
  manifest.set_seed(seed);
  manifest.write(Manifest::path_for_directory(out));
  return 0;
}

// ---- fit ------------------------------------------------------------------

int cmd_fit(const FitArgs& args) {
  Manifest manifest("fit");
  const auto cfg = maybe_config(args.config, manifest);

  std::string logs_path = args.logs;
  if (logs_path.empty() && cfg && cfg->logs) logs_path = cfg->logs->string();
  if (logs_path.empty()) throw_usage("fit needs --logs");
  manifest.add_input(logs_path);

  std::vector<std::string> task_names = args.tasks;
  if (task_names.empty() && cfg) task_names = cfg->tasks;
  const std::vector<TaskDefinition> tasks = resolve_tasks(task_names);

  const LoadedLogs logs = read_logs(logs_path, tasks, args.keep_incomplete);
  report_logs(logs, args.keep_incomplete, args.rejects);
  if (logs.parsed.records.empty()) throw_data("no records in " + logs_path + " for the selected tasks");

  DatasetOptions dopts;
  dopts.allow_incomplete = args.keep_incomplete;
  const Dataset data(tasks, logs.parsed.records, dopts);

  EmOptions em = cfg ? cfg->em : EmOptions{};
  if (args.points) em.points_per_dim = *args.points;
  if (args.max_iters) em.max_iters = *args.max_iters;
  if (args.standard_errors) em.compute_standard_errors = true;

  FixedParams init;
  if (!args.init.empty()) {
    init = align_params(load_params(args.init).params, tasks);
    manifest.add_input(args.init);
  } else {
    init = default_start(data);
  }

  const FitResult fit = fit_em(data, init, em);
  const fs::path out = args.out;
  save_params(out, make_params_file(fit, data.num_persons()));
  manifest.add_output(out);

  std::optional<CorrelationInterval> ci;
  const std::uint64_t seed = args.seed ? *args.seed : (cfg ? cfg->bootstrap.seed : 1);
  if (args.correlation_reps > 0) {
    EmOptions boot = em;
    boot.compute_standard_errors = false;
    ci = correlation_with_ci(fit, data, args.correlation_reps, seed, boot, args.jobs);
  }

  std::string report;
  report += "tasks: ";
  for (std::size_t k = 0; k < tasks.size(); ++k) report += (k ? ", " : "") + tasks[k].id();
  report += "\npersons: " + std::to_string(data.num_persons()) + "\nrecords: " + std::to_string(data.num_records());
  report += "\nconverged: " + std::string(fit.converged ? "true" : "false");
  report += "\nem_iterations: " + std::to_string(fit.em_iterations);
  report += "\nlog_likelihood: " + fixed(fit.final_loglik, 6);
  report += "\nscore_norm: " + format_double(fit.score_norm);
  report += "\npoints_per_dim: " + std::to_string(fit.points_per_dim) + "\n\n";
  report += pad("parameter", 24) + pad("estimate", 12) + "std_error\n";
  const auto names = fit.params.names();
  const auto values = fit.params.flatten();
  for (std::size_t i = 0; i < names.size(); ++i) {
    report += pad(names[i], 24) + pad(fixed(values[i]), 12);
    report += fit.std_errors ? fixed((*fit.std_errors)[i]) : std::string("-");
    report += "\n";
  }
  report += pad("rho", 24) + fixed(fit.params.sigma.correlation()) + "\n";
  if (em.compute_standard_errors && !fit.std_errors) report += "\nstandard errors withheld: " + fit.se_diagnostic + "\n";
  if (ci) {
    report += "\ncorrelation 95% interval: [" + fixed(ci->lower) + ", " + fixed(ci->upper) + "] from " +
              std::to_string(ci->replicates) + " bootstrap refits, " + std::to_string(ci->failures) + " failed";
    if (ci->flagged) report += " (flagged: too many failed refits)";
    report += "\n";
  }
  std::cout << report;

  fs::path report_path = args.report;
  if (report_path.empty()) {
    report_path = out;
    report_path.replace_extension(".report.txt");
  }
  write_text_file(report_path, report);
  manifest.add_output(report_path);
  if (!args.rejects.empty()) manifest.add_output(args.rejects);

  auto& c = manifest.config();
  c["tasks"] = ids_of(tasks);
  c["keep_incomplete"] = args.keep_incomplete;
  c["em"] = em_json(em);
  c["init"] = args.init.empty() ? ordered_json("default") : ordered_json(args.init);
  c["correlation_reps"] = args.correlation_reps;
  c["jobs"] = args.jobs;
  c["converged"] = fit.converged;
  if (ci) {
    c["correlation_ci"] = {{"estimate", ci->estimate}, {"lower", ci->lower},   {"upper", ci->upper},
                           {"replicates", ci->replicates}, {"failures", ci->failures}, {"flagged", ci->flagged}};
  }
  if (args.correlation_reps > 0) manifest.set_seed(seed);
  manifest.write(Manifest::path_for_file(out));

  if (!fit.converged) {
    std::cerr << "fit: EM stopped after " << fit.em_iterations << " iterations without meeting the convergence rule\n";
    return 5;
  }
  return 0;
}

// ---- score ----------------------------------------------------------------

int cmd_score(const ScoreArgs& args) {
  Manifest manifest("score");
  const auto cfg = maybe_config(args.config, manifest);

  std::string logs_path = args.logs;
  if (logs_path.empty() && cfg && cfg->logs) logs_path = cfg->logs->string();
  if (logs_path.empty()) throw_usage("score needs --logs");
  std::string params_path = args.params;
  if (params_path.empty() && cfg && cfg->params) params_path = cfg->params->string();
  if (params_path.empty()) throw_usage("score needs --params");
  manifest.add_input(logs_path);
  manifest.add_input(params_path);

  const ParamsFile pf = load_params(params_path);
  std::vector<std::string> task_names = args.tasks;
  if (task_names.empty() && cfg) task_names = cfg->tasks;
  const std::vector<TaskDefinition> tasks = tasks_for_params(pf.params, task_names);
  const FixedParams params = align_params(pf.params, tasks);

  const LoadedLogs logs = read_logs(logs_path, tasks, args.keep_incomplete);
  report_logs(logs, args.keep_incomplete, "");

  DatasetOptions dopts;
  dopts.allow_incomplete = args.keep_incomplete;
  const Dataset data(tasks, logs.parsed.records, logs.parsed.person_ids, dopts);

  ScoringOptions so = cfg ? cfg->scoring : ScoringOptions{};
  if (args.points) so.points_per_dim = *args.points;
  if (args.map) so.compute_map = true;
  so.jobs = args.jobs;

  const auto scores = score_persons(data, params, so);
  std::size_t without = 0;
  for (std::size_t i = 0; i < data.num_persons(); ++i) without += !data.person_has_data(i);
  if (without) std::cerr << "score: " << without << " person(s) without usable records get the prior\n";

  const fs::path out = args.out;
  write_text_file(out, write_scores(scores));
  manifest.add_output(out);
  std::cerr << "score: " << scores.size() << " persons written to " << out.string() << "\n";

  auto& c = manifest.config();
  c["tasks"] = ids_of(tasks);
  c["params"] = params_json(params);
  c["points_per_dim"] = so.points_per_dim;
  c["map"] = so.compute_map;
  c["keep_incomplete"] = args.keep_incomplete;
  c["jobs"] = args.jobs;
  manifest.write(Manifest::path_for_file(out));
  return 0;
}

// ---- summarize / outcomes -------------------------------------------------

int cmd_summarize(const SummarizeArgs& args) {
  Manifest manifest("summarize");
  manifest.add_input(args.logs);
  const auto tasks = resolve_tasks(args.tasks);
  const LoadedLogs logs = read_logs(args.logs, tasks, true);
  report_logs(logs, true, "");

  std::string csv = csv_row({"person_id", "task_id", "num_actions", "total_duration", "avg_time_per_action"});
  for (const auto& r : logs.parsed.records) {
    const RecordSummary s = summarize(r);
    csv += csv_row({r.person_id, r.task_id, std::to_string(s.num_actions), format_double(s.total_duration),
                    s.avg_time_per_action ? format_double(*s.avg_time_per_action) : std::string()});
  }
  write_text_file(args.out, csv);
  manifest.add_output(args.out);
  manifest.config()["tasks"] = ids_of(tasks);
  manifest.write(Manifest::path_for_file(args.out));
  return 0;
}

int cmd_outcomes(const OutcomesArgs& args) {
  Manifest manifest("outcomes");
  manifest.add_input(args.logs);
  const auto tasks = resolve_tasks(args.tasks);
  const LoadedLogs logs = read_logs(args.logs, tasks, true);
  report_logs(logs, true, "");

  std::map<std::string, const TaskDefinition*> by_id;
  for (const auto& t : tasks) by_id[t.id()] = &t;
  std::vector<OutcomeRow> rows;
  for (const auto& r : logs.parsed.records) rows.push_back({r.person_id, r.task_id, derive_outcome(*by_id.at(r.task_id), r)});

  write_text_file(args.out, write_outcomes(rows));
  manifest.add_output(args.out);
  manifest.config()["tasks"] = ids_of(tasks);
  manifest.write(Manifest::path_for_file(args.out));
  return 0;
}

// ---- regress --------------------------------------------------------------

namespace {

std::vector<TraitPair> aligned_traits(const std::string& path, const std::vector<std::string>& persons) {
  std::map<std::string, TraitPair> by_person;
  for (const auto& s : parse_scores(read_text_file(path))) by_person[s.person_id] = s.eap;
  std::vector<TraitPair> out;
  for (const auto& p : persons) {
    auto it = by_person.find(p);
    if (it == by_person.end()) throw_data(path + ": no score for person '" + p + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<double> aligned_outcome(const std::vector<OutcomeRow>& rows, const std::string& path,
                                    const std::string& task_id, const std::vector<std::string>& persons) {
  std::map<std::string, double> by_person;
  for (const auto& r : rows) {
    if (r.task_id == task_id) by_person[r.person_id] = r.success ? 1.0 : 0.0;
  }
  std::vector<double> out;
  for (const auto& p : persons) {
    auto it = by_person.find(p);
    if (it == by_person.end()) throw_data(path + ": no " + task_id + " outcome for person '" + p + "'");
    out.push_back(it->second);
  }
  return out;
}

bool has_inputs(const std::string& model, const ValidationInputs& in) {
  try {
    model_design(model, in);
    return true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::data) throw;
    return false;
  }
}

}  // namespace

int cmd_regress(const RegressArgs& args) {
  Manifest manifest("regress");
  manifest.add_input(args.criterion);
  const auto criterion = parse_criterion(read_text_file(args.criterion));
  if (criterion.empty()) throw_data("no rows in " + args.criterion);

  ValidationInputs in;
  std::vector<std::string> persons;
  for (const auto& row : criterion) {
    persons.push_back(row.person_id);
    in.criterion.push_back(row.value);
  }
  if (std::set<std::string>(persons.begin(), persons.end()).size() != persons.size()) {
    throw_data(args.criterion + ": duplicate person_id");
  }
  auto load_traits = [&](const std::string& path, std::optional<std::vector<TraitPair>>& slot) {
    if (path.empty()) return;
    manifest.add_input(path);
    slot = aligned_traits(path, persons);
  };
  load_traits(args.scores, in.joint_traits);
  load_traits(args.scores_task1, in.task1_traits);
  load_traits(args.scores_task2, in.task2_traits);
  if (!args.outcomes.empty()) {
    manifest.add_input(args.outcomes);
    const auto rows = parse_outcomes(read_text_file(args.outcomes));
    in.outcome1 = aligned_outcome(rows, args.outcomes, args.task1_id, persons);
    in.outcome2 = aligned_outcome(rows, args.outcomes, args.task2_id, persons);
  }

  ValidationOptions vo;
  if (!args.models.empty()) {
    vo.models = args.models;
  } else {
    std::vector<std::string> available;
    for (const auto& m : vo.models) {
      if (has_inputs(m, in)) available.push_back(m);
    }
    vo.models = available;
  }
  if (vo.models.empty()) throw_usage("regress: no model has all of its inputs; pass --scores and/or --outcomes");
  const std::set<std::string> chosen(vo.models.begin(), vo.models.end());
  std::vector<std::pair<std::string, std::string>> diffs;
  if (args.reps > 0) {
    for (const auto& d : vo.differences) {
      if (chosen.count(d.first) && chosen.count(d.second)) diffs.push_back(d);
    }
  }
  vo.differences = diffs;
  vo.bootstrap.reps = args.reps;
  vo.bootstrap.seed = args.seed;
  vo.bootstrap.jobs = args.jobs;

  const ValidationReport report = run_validation_suite(in, vo);

  const fs::path out = args.out;
  std::string models = csv_row({"model", "formula", "n", "r_squared", "residual_sd"});
  std::string coefs = csv_row({"model", "term", "estimate", "std_error", "t_value", "p_value"});
  std::cout << pad("model", 7) << pad("R2", 9) << "formula\n";
  for (const auto& m : report.models) {
    models += csv_row({m.name, m.formula, std::to_string(m.result.n), format_double(m.result.r_squared),
                       format_double(m.result.residual_sd)});
    for (const auto& c : m.result.coefficients) {
      coefs += csv_row({m.name, c.name, format_double(c.estimate), format_double(c.std_error), format_double(c.t_value),
                        format_double(c.p_value)});
    }
    std::cout << pad(m.name, 7) << pad(fixed(m.result.r_squared), 9) << m.formula << "\n";
  }
  std::string diffs_csv = csv_row({"comparison", "estimate", "lower", "upper", "replicates", "failures"});
  if (!report.differences.empty()) std::cout << "\n" << pad("comparison", 12) << "R2 difference [95% interval]\n";
  for (const auto& d : report.differences) {
    diffs_csv += csv_row({d.label, format_double(d.estimate), format_double(d.lower), format_double(d.upper),
                          std::to_string(d.replicates), std::to_string(d.failures)});
    std::cout << pad(d.label, 12) << fixed(d.estimate) << " [" << fixed(d.lower) << ", " << fixed(d.upper) << "]\n";
  }
  for (const auto& [name, text] : {std::pair{"models.csv", &models}, {"coefficients.csv", &coefs}, {"r2_differences.csv", &diffs_csv}}) {
    write_text_file(out / name, *text);
    manifest.add_output(out / name);
  }

  auto& c = manifest.config();
  c["models"] = vo.models;
  ordered_json dj = ordered_json::array();
  for (const auto& d : diffs) dj.push_back(d.first + "-" + d.second);
  c["differences"] = dj;
  c["task1_id"] = args.task1_id;
  c["task2_id"] = args.task2_id;
  c["bootstrap_reps"] = args.reps;
  c["jobs"] = args.jobs;
  manifest.set_seed(args.seed);
  manifest.write(Manifest::path_for_directory(out));
  return 0;
}

// ---- repro-sim-study ------------------------------------------------------

int cmd_repro_sim_study(const ReproArgs& args) {
  Manifest manifest("repro-sim-study");
  StudyOptions so;
  if (!args.settings.empty()) {
    so.settings.clear();
    for (const auto& s : args.settings) so.settings.push_back(find_setting(s).name);
  }
  so.replications = args.reps;
  so.seed = args.seed;
  if (args.points) so.scoring_points = *args.points;
  so.max_steps = args.max_steps;
  so.jobs = args.jobs;
  const fs::path out = args.out;
  if (!args.no_checkpoints) so.checkpoint_dir = args.checkpoints.empty() ? out / "checkpoints" : fs::path(args.checkpoints);

  std::mutex io;
  const auto results = run_study(so, [&](const ReplicationSummary& s) {
    std::lock_guard lock(io);
    std::cerr << s.setting << " replication " << s.replication + 1 << "/" << so.replications << ": "
              << (s.converged ? "converged" : "NOT converged") << " after " << s.em_iterations << " EM iterations\n";
  });

  const StudyTables tables = format_study_tables(results);
  for (const auto& [name, text] : {std::pair{"parameter_errors.csv", &tables.parameter_errors},
                                   {"trait_mse.csv", &tables.trait_mse},
                                   {"fits.csv", &tables.fits},
                                   {"summary.csv", &tables.summary}}) {
    write_text_file(out / name, *text);
    manifest.add_output(out / name);
  }

  std::size_t failed = 0;
  for (const auto& r : results) failed += !r.converged;
  std::cerr << "repro-sim-study: " << results.size() << " replications, " << failed << " without convergence; tables in "
            << out.string() << "\n";

  auto& c = manifest.config();
  c["settings"] = so.settings;
  c["replications"] = so.replications;
  c["em"] = em_json(so.em);
  c["scoring_points"] = so.scoring_points;
  c["max_steps"] = so.max_steps;
  c["checkpoints"] = so.checkpoint_dir ? ordered_json(so.checkpoint_dir->string()) : ordered_json(nullptr);
  c["jobs"] = so.jobs;
  manifest.set_seed(so.seed);
  manifest.write(Manifest::path_for_directory(out));
  return 0;
}

// ---- validate-task / convert-tickets --------------------------------------

int cmd_validate_task(const ValidateTaskArgs& args) {
  bool clean = true;
  for (const auto& f : args.files) {
    std::string text;
    if (!fs::exists(f)) {
      const auto names = builtin_task_names();
      if (std::find(names.begin(), names.end(), f) == names.end()) throw_usage("no task file or builtin task named " + f);
      text = std::string(builtin_task_text(f));
    } else {
      text = read_text_file(f);
    }
    const auto diags = validate_task_text(text);
    if (diags.empty()) {
      std::cout << f << ": ok\n";
      continue;
    }
    clean = false;
    for (const auto& d : diags) std::cout << f << ": " << d << "\n";
  }
  return clean ? 0 : 3;
}

int cmd_convert_tickets(const ConvertArgs& args) {
  Manifest manifest("convert-tickets");
  manifest.add_input(args.input);
  const TaskDefinition task = resolve_task(args.task);
  LogParseOptions opts;
  opts.keep_incomplete = true;
  const ParsedLogs parsed = convert_descriptive_logs(read_text_file(args.input), task, opts);
  LoadedLogs wrapped{parsed, 0};
  report_logs(wrapped, true, args.rejects);
  if (!args.rejects.empty()) manifest.add_output(args.rejects);

  write_text_file(args.out, write_logs(parsed.records, {task}));
  manifest.add_output(args.out);
  manifest.config()["task"] = task.id();
  manifest.write(Manifest::path_for_file(args.out));
  return 0;
}

}  // namespace ctdc::cli
