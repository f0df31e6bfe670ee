#include <filesystem>
#include <set>

#include "ctdc/csv.hpp"
#include "ctdc/io.hpp"
#include "ctdc/study.hpp"
#include "doctest.h"

using namespace ctdc;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ctdc_test_study" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

StudyOptions small_study() {
  StudyOptions o;
  o.settings = {"S2"};
  o.replications = 2;
  o.seed = 31;
  o.scoring_points = 21;
  return o;
}

}  // namespace

TEST_CASE("replication seeds") {
  CHECK(replication_seed(1, "S1", 0) == replication_seed(1, "S1", 0));
  std::set<std::uint64_t> seen;
  for (const char* s : {"S1", "S2", "S3", "S4", "S5", "S6"}) {
    for (std::size_t r = 0; r < 50; ++r) seen.insert(replication_seed(20190417, s, r));
  }
  CHECK(seen.size() == 300);
  CHECK(replication_seed(1, "S1", 0) != replication_seed(2, "S1", 0));
}

TEST_CASE("one replication") {
  const ReplicationRun run = run_replication(find_setting("S1"), 0, small_study());
  CHECK(run.cohort.traits.size() == 100);
  CHECK(run.joint.num_persons() == 100);
  CHECK(run.fit_joint.converged);
  CHECK(run.fit_task1.params.num_tasks() == 1);
  CHECK(run.scores_joint.size() == 100);
  const ReplicationSummary s = summarize_run(run);
  CHECK(s.names == run.truth.names());
  CHECK(s.estimate == run.fit_joint.params.flatten());
  CHECK(s.rho == -0.25);
  CHECK(s.joint.theta > 0.0);
  CHECK(s.joint.theta < s.task1.theta);
}

TEST_CASE("summaries round trip through JSON") {
  ReplicationSummary s;
  s.setting = "S4";
  s.num_persons = 400;
  s.rho = -0.25;
  s.replication = 3;
  s.seed = 18446744073709551557ull;
  s.names = {"beta_a", "gamma_a", "s11", "s12", "s22"};
  s.truth = {1.5, -1.7, 2.18, -0.1, 0.11};
  s.estimate = {1.0 / 3.0, -1.69, 2.2, -0.09, 0.12};
  s.converged = true;
  s.em_iterations = 12;
  s.final_loglik = -4321.123456789;
  s.truncated = 1;
  s.joint = {0.5, 0.05};
  s.task1 = {0.9, 0.08};
  s.task2 = {0.7, 0.07};
  const ReplicationSummary b = summary_from_json(summary_to_json(s));
  CHECK(summary_to_json(b) == summary_to_json(s));
  CHECK(b.seed == s.seed);
  CHECK(b.estimate == s.estimate);
  CHECK(b.task2.tau == 0.07);
}

TEST_CASE("studies are deterministic and resume from checkpoints") {
  const auto dir = fresh_dir("resume");
  StudyOptions o = small_study();
  const auto plain = run_study(o);
  REQUIRE(plain.size() == 2);
  CHECK(plain[0].replication == 0);
  CHECK(plain[1].replication == 1);
  CHECK(plain[0].seed == replication_seed(31, "S2", 0));

  o.checkpoint_dir = dir;
  const auto first = run_study(o);
  CHECK(format_study_tables(first).summary == format_study_tables(plain).summary);
  CHECK(std::filesystem::exists(dir / "S2-0.json"));
  CHECK(std::filesystem::exists(dir / "S2-1.json"));

  // a tampered checkpoint is read back as is; a corrupt one is recomputed
  ReplicationSummary t = summary_from_json(read_text_file(dir / "S2-0.json"));
  t.em_iterations = 9999;
  write_text_file(dir / "S2-0.json", summary_to_json(t));
  write_text_file(dir / "S2-1.json", "{ not json");
  const auto resumed = run_study(o);
  CHECK(resumed[0].em_iterations == 9999);
  CHECK(resumed[1].estimate == plain[1].estimate);

  o.jobs = 2;
  o.checkpoint_dir.reset();
  const auto par = run_study(o);
  const auto a = format_study_tables(par), b = format_study_tables(plain);
  CHECK(a.parameter_errors == b.parameter_errors);
  CHECK(a.trait_mse == b.trait_mse);
  CHECK(a.fits == b.fits);
}

TEST_CASE("study tables") {
  StudyOptions o = small_study();
  o.replications = 1;
  const auto results = run_study(o);
  const StudyTables t = format_study_tables(results);
  const CsvTable pe = parse_csv(t.parameter_errors);
  CHECK(pe.rows.size() == results[0].names.size());
  const CsvTable mse = parse_csv(t.trait_mse);
  CHECK(mse.rows.size() == 3);
  const CsvTable fits = parse_csv(t.fits);
  CHECK(fits.rows.size() == 1);
  const CsvTable sum = parse_csv(t.summary);
  CHECK(sum.require_column("median_abs_error", "summary") == 6);
  CHECK(sum.rows.size() >= results[0].names.size());
}
