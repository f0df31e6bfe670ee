#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "ctdc/error.hpp"
#include "ctdc/version.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kSchema = 3, kData = 4, kConvergence = 5 };

int exit_code(ctdc::ErrorKind kind) {
  switch (kind) {
    case ctdc::ErrorKind::usage: return kUsage;
    case ctdc::ErrorKind::schema: return kSchema;
    case ctdc::ErrorKind::data: return kData;
    case ctdc::ErrorKind::convergence: return kConvergence;
  }
  return kOther;
}

const char* kTasksHelp = "Builtin task names or task JSON files (default: every builtin task)";

}  // namespace

int main(int argc, char** argv) {
  using namespace ctdc::cli;

  CLI::App app{"Fit, score and simulate CTDC models of action logs"};
  app.set_version_flag("--version", std::string(ctdc::kVersion));
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 2 usage, 3 schema (task/config/params files), 4 data, 5 convergence, 1 other.\n"
      "Every command except validate-task writes a JSON manifest next to its outputs.");

  std::function<int()> run;

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate cohorts of process records with known traits");
  s->add_option("--config", sim.config, "Run configuration (JSON); flags override its keys");
  s->add_option("--setting", sim.setting, "Simulation setting S1-S6 (sample size and trait correlation)");
  s->add_option("--persons", sim.persons, "Persons per cohort (overrides the setting)")->check(CLI::PositiveNumber);
  s->add_option("--params", sim.params, "Generating parameters file (default: the reference TICKETS estimates)");
  s->add_option("--tasks", sim.tasks, kTasksHelp);
  s->add_option("--rho", sim.rho, "Trait correlation; sets sigma12 = rho*sqrt(sigma11*sigma22)");
  s->add_option("--reps", sim.reps, "Number of cohorts (default 1)");
  s->add_option("--seed", sim.seed, "Random seed (default 1)");
  s->add_option("--max-steps", sim.max_steps, "Stop a record after this many actions (default 500)");
  s->add_option("--first-action", sim.first_action, "Time to first action: 'exponential' (default) or 'fixed:<seconds>'");
  s->add_option("--out", sim.out, "Output directory for cohort_NNNN.csv and truth_NNNN.csv")->capture_default_str();
  s->add_option("--jobs", sim.jobs, "Worker threads")->capture_default_str();
  s->callback([&] { run = [&] { return cmd_simulate(sim); }; });

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Maximum marginal likelihood fit by EM");
  f->add_option("--config", fit.config, "Run configuration (JSON); flags override its keys");
  f->add_option("--logs", fit.logs, "Event log CSV (person_id, task_id, time, state_id)");
  f->add_option("--tasks", fit.tasks, kTasksHelp);
  f->add_option("--out", fit.out, "Parameter file to write")->capture_default_str();
  f->add_option("--report", fit.report, "Text report (default: the --out path with extension .report.txt)");
  f->add_option("--init", fit.init, "Starting values from a parameter file");
  f->add_option("--rejects", fit.rejects, "Write rejected and incomplete record groups to this CSV");
  f->add_option("--points", fit.points, "Gauss-Hermite points per dimension (default 21)")->check(CLI::Range(2, 200));
  f->add_option("--max-iters", fit.max_iters, "EM iteration cap (default 500)");
  f->add_flag("--se", fit.standard_errors, "Compute standard errors from the observed information");
  f->add_flag("--keep-incomplete", fit.keep_incomplete, "Use records that never reached a terminal state");
  f->add_option("--correlation-ci", fit.correlation_reps, "Bootstrap replicates for a trait correlation interval (>= 200)");
  f->add_option("--seed", fit.seed, "Bootstrap seed (default 1)");
  f->add_option("--jobs", fit.jobs, "Worker threads for bootstrap refits")->capture_default_str();
  f->callback([&] { run = [&] { return cmd_fit(fit); }; });

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "EAP (and optionally MAP) trait estimates per person");
  sc->add_option("--config", score.config, "Run configuration (JSON); flags override its keys");
  sc->add_option("--logs", score.logs, "Event log CSV");
  sc->add_option("--params", score.params, "Fitted parameter file");
  sc->add_option("--tasks", score.tasks, "Tasks to score on (default: the tasks in the parameter file)");
  sc->add_option("--out", score.out, "Scores CSV")->capture_default_str();
  sc->add_option("--points", score.points, "Quadrature points per dimension (default 41)")->check(CLI::Range(2, 200));
  sc->add_flag("--map", score.map, "Also compute posterior modes");
  sc->add_flag("--keep-incomplete", score.keep_incomplete, "Use records that never reached a terminal state");
  sc->add_option("--jobs", score.jobs, "Worker threads")->capture_default_str();
  sc->callback([&] { run = [&] { return cmd_score(score); }; });

  SummarizeArgs sum;
  auto* su = app.add_subcommand("summarize", "Per-record action count, total duration and mean time per action");
  su->add_option("--logs", sum.logs, "Event log CSV")->required();
  su->add_option("--tasks", sum.tasks, kTasksHelp);
  su->add_option("--out", sum.out, "Output CSV")->capture_default_str();
  su->callback([&] { run = [&] { return cmd_summarize(sum); }; });

  OutcomesArgs outc;
  auto* o = app.add_subcommand("outcomes", "Binary task outcomes derived from the action sequences");
  o->add_option("--logs", outc.logs, "Event log CSV")->required();
  o->add_option("--tasks", outc.tasks, kTasksHelp);
  o->add_option("--out", outc.out, "Output CSV")->capture_default_str();
  o->callback([&] { run = [&] { return cmd_outcomes(outc); }; });

  RegressArgs reg;
  auto* r = app.add_subcommand("regress", "Criterion regressions M1-M8 with bootstrap R^2 differences");
  r->add_option("--criterion", reg.criterion, "CSV with person_id, criterion")->required();
  r->add_option("--scores", reg.scores, "Scores from the joint fit (models M1-M3)");
  r->add_option("--scores-task1", reg.scores_task1, "Scores from the task 1 fit (M4)");
  r->add_option("--scores-task2", reg.scores_task2, "Scores from the task 2 fit (M5)");
  r->add_option("--outcomes", reg.outcomes, "Outcome CSV (M6-M8)");
  r->add_option("--task1-id", reg.task1_id, "Task id of the first outcome")->capture_default_str();
  r->add_option("--task2-id", reg.task2_id, "Task id of the second outcome")->capture_default_str();
  r->add_option("--models", reg.models, "Models to fit (default: every model whose inputs are given)");
  r->add_option("--reps", reg.reps, "Bootstrap replicates for R^2 differences (0 skips them)")->capture_default_str();
  r->add_option("--seed", reg.seed, "Bootstrap seed")->capture_default_str();
  r->add_option("--jobs", reg.jobs, "Worker threads")->capture_default_str();
  r->add_option("--out", reg.out, "Output directory")->capture_default_str();
  r->callback([&] { run = [&] { return cmd_regress(reg); }; });

  ReproArgs rep;
  auto* rs = app.add_subcommand("repro-sim-study", "Run the simulation study and write error tables for plotting");
  rs->add_option("--out", rep.out, "Output directory")->capture_default_str();
  rs->add_option("--seed", rep.seed, "Study seed")->capture_default_str();
  rs->add_option("--reps", rep.reps, "Replications per setting")->capture_default_str()->check(CLI::PositiveNumber);
  rs->add_option("--settings", rep.settings, "Subset of S1-S6 (default: all)");
  rs->add_option("--points", rep.points, "Quadrature points per dimension for EAP scoring (default 41)");
  rs->add_option("--max-steps", rep.max_steps, "Simulation step cap per record")->capture_default_str();
  rs->add_option("--checkpoints", rep.checkpoints, "Checkpoint directory (default: <out>/checkpoints)");
  rs->add_flag("--no-checkpoints", rep.no_checkpoints, "Do not read or write checkpoints");
  rs->add_option("--jobs", rep.jobs, "Replications run in parallel")->capture_default_str();
  rs->callback([&] { run = [&] { return cmd_repro_sim_study(rep); }; });

  ValidateTaskArgs val;
  auto* v = app.add_subcommand("validate-task", "Check task definition files and print diagnostics");
  v->add_option("files", val.files, "Task JSON files or builtin task names")->required();
  v->callback([&] { run = [&] { return cmd_validate_task(val); }; });

  ConvertArgs conv;
  auto* cv = app.add_subcommand("convert-tickets", "Convert descriptive TICKETS logs (StID, Time, attributes) to event logs");
  cv->add_option("--in", conv.input, "Descriptive log CSV")->required();
  cv->add_option("--task", conv.task, "Task the log belongs to")->capture_default_str();
  cv->add_option("--out", conv.out, "Event log CSV")->capture_default_str();
  cv->add_option("--rejects", conv.rejects, "Write unconvertible groups to this CSV");
  cv->callback([&] { run = [&] { return cmd_convert_tickets(conv); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return run();
  } catch (const ctdc::Error& e) {
    std::cerr << "error (" << ctdc::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
