#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "ctdc/csv.hpp"
#include "ctdc/io.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace ctdc;

namespace {

const fs::path kData = CTDC_DATA_DIR;

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "ctdc_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(CTDC_BIN) + " " + args + " > " + (work_dir() / "stdout.txt").string() + " 2> " +
                          (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

}  // namespace

TEST_CASE("version and usage") {
  CHECK(run("--version") == 0);
  CHECK(read_text_file(work_dir() / "stdout.txt").find('.') != std::string::npos);
  CHECK(run("") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("simulate --persons 0") == 2);
  CHECK(run("simulate --setting S9 --out " + path("bad")) == 2);
  CHECK(run("fit --help") == 0);
}

TEST_CASE("simulate is deterministic and matches the study seeds") {
  REQUIRE(run("simulate --setting S1 --seed 9 --reps 2 --out " + path("simA")) == 0);
  REQUIRE(run("simulate --setting S1 --seed 9 --reps 2 --jobs 2 --out " + path("simB")) == 0);
  for (const char* f : {"cohort_0001.csv", "cohort_0002.csv", "truth_0001.csv", "truth_0002.csv"}) {
    CAPTURE(f);
    CHECK(read_text_file(fs::path(path("simA")) / f) == read_text_file(fs::path(path("simB")) / f));
  }
  CHECK(fs::exists(fs::path(path("simA")) / "manifest.json"));
  const auto truth = parse_truth(read_text_file(fs::path(path("simA")) / "truth_0001.csv"));
  CHECK(truth.size() == 100);
  REQUIRE(run("simulate --setting S1 --seed 10 --out " + path("simC")) == 0);
  CHECK(read_text_file(fs::path(path("simA")) / "cohort_0001.csv") !=
        read_text_file(fs::path(path("simC")) / "cohort_0001.csv"));
}

TEST_CASE("single person, single task") {
  REQUIRE(run("simulate --persons 1 --tasks tickets-task1 --seed 3 --out " + path("one")) == 0);
  const std::string logs = read_text_file(fs::path(path("one")) / "cohort_0001.csv");
  const CsvTable t = parse_csv(logs);
  REQUIRE_FALSE(t.rows.empty());
  for (const auto& row : t.rows) {
    CHECK(row[0] == t.rows[0][0]);
    CHECK(row[1] == "tickets-task1");
  }
}

TEST_CASE("fit and score a simulated cohort") {
  REQUIRE(run("simulate --setting S5 --seed 4 --out " + path("fitsim")) == 0);
  const std::string logs = (fs::path(path("fitsim")) / "cohort_0001.csv").string();
  REQUIRE(run("fit --logs " + logs + " --se --out " + path("fit/params.json")) == 0);
  const ParamsFile pf = load_params(path("fit/params.json"));
  REQUIRE(pf.fit);
  CHECK(pf.fit->converged);
  CHECK(pf.fit->std_errors);
  CHECK(pf.fit->num_persons == 400);
  CHECK(fs::exists(path("fit/params.report.txt")));
  CHECK(fs::exists(path("fit/params.json.manifest.json")));

  REQUIRE(run("score --logs " + logs + " --params " + path("fit/params.json") + " --map --out " + path("fit/scores.csv")) == 0);
  const auto scores = parse_scores(read_text_file(path("fit/scores.csv")));
  CHECK(scores.size() == 400);
  CHECK(scores[0].map);

  REQUIRE(run("score --logs " + logs + " --params " + path("fit/params.json") + " --tasks tickets-task2 --out " +
              path("fit/scores_t2.csv")) == 0);
  CHECK(parse_scores(read_text_file(path("fit/scores_t2.csv"))).size() == 400);
}

TEST_CASE("data problems map to exit codes") {
  write_text_file(path("empty.csv"), "person_id,task_id,time,state_id\n");
  CHECK(run("fit --logs " + path("empty.csv") + " --out " + path("empty.json")) == 4);
  write_text_file(path("unknown.csv"), "person_id,task_id,time,state_id\n1,mystery,0,1\n");
  CHECK(run("fit --logs " + path("unknown.csv") + " --out " + path("unknown.json")) == 4);
  write_text_file(path("params_bad.json"), "{\"format\": \"ctdc-params\"");
  CHECK(run("score --logs " + (kData / "logs/student17.csv").string() + " --params " + path("params_bad.json")) == 3);
  write_text_file(path("task_bad.json"), "{\"id\": \"t\"}");
  CHECK(run("validate-task " + path("task_bad.json")) == 3);
  CHECK(run("validate-task tickets-task1 tickets-task2") == 0);
  CHECK(run("fit --logs " + path("nowhere.csv")) != 0);
  write_text_file(path("cfg_bad.json"), "{\"seed\": 1}");
  CHECK(run("fit --config " + path("cfg_bad.json")) == 3);
}

TEST_CASE("summary and outcomes of the student 17 record") {
  const std::string logs = (kData / "logs/student17.csv").string();
  REQUIRE(run("summarize --logs " + logs + " --out " + path("summary.csv")) == 0);
  const CsvTable s = parse_csv(read_text_file(path("summary.csv")));
  REQUIRE(s.rows.size() == 1);
  CHECK(s.rows[0][0] == "17");
  CHECK(s.rows[0][2] == "4");
  CHECK(parse_double(s.rows[0][3], "duration") == 32.9);
  CHECK(std::abs(parse_double(s.rows[0][4], "avg") - 25.6 / 3) < 1e-12);

  REQUIRE(run("outcomes --logs " + logs + " --out " + path("outcomes.csv")) == 0);
  const auto o = parse_outcomes(read_text_file(path("outcomes.csv")));
  REQUIRE(o.size() == 1);
  CHECK_FALSE(o[0].success);

  REQUIRE(run("convert-tickets --in " + (kData / "logs/student17_descriptive.csv").string() + " --out " +
              path("converted.csv")) == 0);
  CHECK(read_text_file(path("converted.csv")) == read_text_file(logs));
}

TEST_CASE("regression on criterion and scores") {
  REQUIRE(run("simulate --setting S2 --seed 6 --out " + path("regsim")) == 0);
  const std::string logs = (fs::path(path("regsim")) / "cohort_0001.csv").string();
  const auto truth = parse_truth(read_text_file(fs::path(path("regsim")) / "truth_0001.csv"));
  std::vector<CriterionRow> crit;
  for (const auto& t : truth) crit.push_back({t.person_id, 500 + 30 * t.traits.theta});
  write_text_file(path("criterion.csv"), write_criterion(crit));
  REQUIRE(run("score --logs " + logs + " --params " + (kData / "params/tickets_reference.json").string() + " --out " +
              path("regscores.csv")) == 0);
  REQUIRE(run("outcomes --logs " + logs + " --out " + path("regoutcomes.csv")) == 0);
  REQUIRE(run("regress --criterion " + path("criterion.csv") + " --scores " + path("regscores.csv") + " --outcomes " +
              path("regoutcomes.csv") + " --reps 200 --out " + path("reg")) == 0);
  const CsvTable models = parse_csv(read_text_file(fs::path(path("reg")) / "models.csv"));
  CHECK(models.rows.size() == 6);
  CHECK(fs::exists(fs::path(path("reg")) / "coefficients.csv"));
  const CsvTable diffs = parse_csv(read_text_file(fs::path(path("reg")) / "r2_differences.csv"));
  CHECK_FALSE(diffs.rows.empty());
}

TEST_CASE("simulation study subset") {
  REQUIRE(run("repro-sim-study --settings S2 --reps 1 --seed 5 --points 21 --out " + path("study")) == 0);
  const fs::path out = path("study");
  for (const char* f : {"parameter_errors.csv", "trait_mse.csv", "fits.csv", "summary.csv", "manifest.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(out / f));
  }
  const CsvTable fits = parse_csv(read_text_file(out / "fits.csv"));
  REQUIRE(fits.rows.size() == 1);
  CHECK(fits.rows[0][0] == "S2");
  CHECK(fs::exists(out / "checkpoints" / "S2-0.json"));
}
