#include "ctdc/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ctdc/csv.hpp"
#include "ctdc/error.hpp"
#include "json.hpp"

namespace ctdc {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw_data("write failed for " + path.string());
}

// ---- event logs -----------------------------------------------------------

namespace {

struct RawRow {
  double time = 0.0;
  int state = 0;
  std::size_t line = 0;
};

struct Group {
  std::string person_id;
  std::string task_id;
  std::vector<RawRow> rows;
};

const TaskDefinition& find_task(const std::vector<TaskDefinition>& tasks, const std::string& id) {
  for (const auto& t : tasks) {
    if (t.id() == id) return t;
  }
  throw_data("unknown task_id '" + id + "'");
}

// Empty string when the group is a valid record.
std::string check_group(const Group& g, const TaskDefinition& task, ProcessRecord& out, bool& terminated) {
  const auto& rows = g.rows;
  if (rows.front().time != 0.0) return "first row is not at time 0";
  if (rows.front().state != task.initial_state().value) return "first row is not the initial state";
  out = ProcessRecord{g.person_id, g.task_id, 0.0, {}};
  HistoryState h = initial_history(task);
  double last = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const RawRow& r = rows[i];
    if (!(r.time > last)) return "non-increasing time";
    if (r.state < 1 || r.state > static_cast<int>(task.num_states())) {
      return "unknown state id " + std::to_string(r.state);
    }
    if (h.terminated) return "event after terminal state";
    const auto next = candidates(task, h);
    bool legal = false;
    for (const auto& c : next) legal = legal || c.state.value == r.state;
    if (!legal) return "illegal transition " + std::to_string(h.current.value) + " -> " + std::to_string(r.state);
    h = advance(task, h, StateId(r.state));
    out.events.push_back({r.time, StateId(r.state)});
    last = r.time;
  }
  terminated = h.terminated;
  return {};
}

ParsedLogs assemble(std::vector<Group> groups, const std::vector<TaskDefinition>& tasks,
                    const LogParseOptions& options) {
  ParsedLogs parsed;
  for (auto& g : groups) {
    const TaskDefinition& task = find_task(tasks, g.task_id);
    ProcessRecord rec;
    bool terminated = false;
    const std::string reason = check_group(g, task, rec, terminated);
    const std::size_t line = g.rows.front().line;
    if (!reason.empty()) {
      parsed.rejects.push_back({g.person_id, g.task_id, line, reason});
      continue;
    }
    if (!terminated) {
      parsed.incomplete.push_back({g.person_id, g.task_id, line, "incomplete"});
      if (!options.keep_incomplete) continue;
    }
    parsed.records.push_back(std::move(rec));
  }
  return parsed;
}

std::vector<Group> group_rows(std::vector<std::pair<std::pair<std::string, std::string>, RawRow>> rows) {
  std::vector<Group> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (auto& [key, row] : rows) {
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.push_back({key.first, key.second, {}});
    groups[it->second].rows.push_back(row);
  }
  return groups;
}

std::vector<std::string> first_appearance(const CsvTable& table, std::size_t column) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    if (seen.insert(row[column]).second) out.push_back(row[column]);
  }
  return out;
}

}  // namespace

ParsedLogs parse_logs(std::string_view csv, const std::vector<TaskDefinition>& tasks, const LogParseOptions& options) {
  const CsvTable table = parse_csv(csv);
  const std::size_t cp = table.require_column("person_id", "log file");
  const std::size_t ct = table.require_column("task_id", "log file");
  const std::size_t cm = table.require_column("time", "log file");
  const std::size_t cs = table.require_column("state_id", "log file");

  ParsedLogs bad;
  std::set<std::pair<std::string, std::string>> broken;
  std::vector<std::pair<std::pair<std::string, std::string>, RawRow>> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    find_task(tasks, f[ct]);
    std::pair key{f[cp], f[ct]};
    RawRow row;
    row.line = table.lines[r];
    try {
      const std::string ctx = "line " + std::to_string(row.line);
      row.time = parse_double(f[cm], ctx + " time");
      const long long s = parse_integer(f[cs], ctx + " state_id");
      row.state = s < 0 || s > 1'000'000 ? -1 : static_cast<int>(s);
    } catch (const Error& e) {
      if (broken.insert(key).second) bad.rejects.push_back({key.first, key.second, row.line, e.what()});
      continue;
    }
    rows.emplace_back(std::move(key), row);
  }
  std::vector<Group> groups;
  for (auto& g : group_rows(std::move(rows))) {
    if (!broken.contains({g.person_id, g.task_id})) groups.push_back(std::move(g));
  }
  ParsedLogs parsed = assemble(std::move(groups), tasks, options);
  parsed.rejects.insert(parsed.rejects.end(), bad.rejects.begin(), bad.rejects.end());
  parsed.person_ids = first_appearance(table, cp);
  return parsed;
}

std::string write_logs(std::span<const ProcessRecord> records, const std::vector<TaskDefinition>& tasks) {
  std::string out = "person_id,task_id,time,state_id\n";
  for (const auto& rec : records) {
    const TaskDefinition& task = find_task(tasks, rec.task_id);
    out += csv_row({rec.person_id, rec.task_id, format_double(rec.initial_time),
                    std::to_string(task.initial_state().value)});
    for (const auto& e : rec.events) {
      out += csv_row({rec.person_id, rec.task_id, format_double(e.time), std::to_string(e.state.value)});
    }
  }
  return out;
}

namespace {

bool attribute_matches(std::string_view declared, std::string_view observed) {
  if (declared == observed) return true;
  if (declared.find('/') == std::string_view::npos) return false;
  std::size_t start = 0;
  while (start <= declared.size()) {
    const std::size_t end = std::min(declared.find('/', start), declared.size());
    if (declared.substr(start, end - start) == observed) return true;
    start = end + 1;
  }
  return false;
}

std::string_view trimmed(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

}  // namespace

ParsedLogs convert_descriptive_logs(std::string_view csv, const TaskDefinition& task, const LogParseOptions& options) {
  const CsvTable table = parse_csv(csv);
  const std::size_t cp = table.require_column("StID", "descriptive log file");
  const std::size_t cm = table.require_column("Time", "descriptive log file");
  std::vector<std::size_t> attr_cols;
  for (const auto& name : task.attribute_names()) attr_cols.push_back(table.require_column(name, "descriptive log file"));

  ParsedLogs bad;
  std::set<std::string> broken;
  std::vector<std::pair<std::pair<std::string, std::string>, RawRow>> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const std::string& person = f[cp];
    if (broken.contains(person)) continue;
    RawRow row;
    row.line = table.lines[r];
    std::string problem;
    try {
      row.time = parse_double(f[cm], "line " + std::to_string(row.line) + " Time");
    } catch (const Error& e) {
      problem = e.what();
    }
    if (problem.empty()) {
      std::vector<int> matches;
      for (int s = 1; s <= static_cast<int>(task.num_states()); ++s) {
        const auto attrs = task.attributes(StateId(s));
        bool ok = attrs.size() == attr_cols.size();
        for (std::size_t a = 0; ok && a < attr_cols.size(); ++a) {
          ok = attribute_matches(attrs[a], trimmed(f[attr_cols[a]]));
        }
        if (ok) matches.push_back(s);
      }
      if (matches.empty()) problem = "line " + std::to_string(row.line) + ": no state matches the row";
      if (matches.size() > 1) problem = "line " + std::to_string(row.line) + ": row matches several states";
      if (matches.size() == 1) row.state = matches.front();
    }
    if (!problem.empty()) {
      broken.insert(person);
      bad.rejects.push_back({person, task.id(), row.line, problem});
      continue;
    }
    rows.push_back({{person, task.id()}, row});
  }
  std::vector<Group> groups;
  for (auto& g : group_rows(std::move(rows))) {
    if (!broken.contains(g.person_id)) groups.push_back(std::move(g));
  }
  ParsedLogs parsed = assemble(std::move(groups), {task}, options);
  parsed.rejects.insert(parsed.rejects.end(), bad.rejects.begin(), bad.rejects.end());
  parsed.person_ids = first_appearance(table, cp);
  return parsed;
}

std::string format_rejects(const ParsedLogs& parsed) {
  std::string out = "person_id,task_id,line,reason\n";
  for (const auto* list : {&parsed.rejects, &parsed.incomplete}) {
    for (const auto& r : *list) out += csv_row({r.person_id, r.task_id, std::to_string(r.line), r.reason});
  }
  return out;
}

// ---- parameters -----------------------------------------------------------

namespace {

[[noreturn]] void schema_at(const std::string& where, const std::string& what) {
  throw_schema(where + ": " + what);
}

std::string line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) line += text[i] == '\n';
  return "line " + std::to_string(line);
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw_schema(what + ": syntax error at " + line_of(text, e.byte) + ": " + e.what());
  }
}

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) schema_at(where, "missing required key '" + std::string(key) + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw_schema("key '" + key + "' must be a number");
  return v.get<double>();
}

std::string string_value(const json& v, const std::string& key) {
  if (!v.is_string()) throw_schema("key '" + key + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t unsigned_value(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw_schema("key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool bool_value(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw_schema("key '" + key + "' must be true or false");
  return v.get<bool>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    bool ok = false;
    for (const char* n : known) ok = ok || k == n;
    if (!ok) schema_at(where, "unknown key '" + k + "'");
  }
}

}  // namespace

std::string params_to_json(const ParamsFile& file) {
  file.params.check();
  json j;
  j["format"] = "ctdc-params";
  j["version"] = 1;
  j["num_tasks"] = file.params.num_tasks();
  json tasks = json::array();
  for (std::size_t k = 0; k < file.params.num_tasks(); ++k) {
    tasks.push_back({{"id", file.params.task_ids[k]}, {"beta", file.params.betas[k]}, {"gamma", file.params.gammas[k]}});
  }
  j["tasks"] = tasks;
  j["sigma"] = {{"s11", file.params.sigma.s11}, {"s12", file.params.sigma.s12}, {"s22", file.params.sigma.s22}};
  j["quadrature"] = {{"points_per_dim", file.points_per_dim}};
  if (file.fit) {
    const FitProvenance& f = *file.fit;
    json fit = {{"converged", f.converged},
                {"final_loglik", f.final_loglik},
                {"em_iterations", f.em_iterations},
                {"score_norm", f.score_norm},
                {"num_persons", f.num_persons}};
    if (f.std_errors) {
      json se = json::object();
      const auto names = file.params.names();
      for (std::size_t i = 0; i < names.size() && i < f.std_errors->size(); ++i) se[names[i]] = (*f.std_errors)[i];
      fit["std_errors"] = se;
    }
    if (!f.se_diagnostic.empty()) fit["se_diagnostic"] = f.se_diagnostic;
    j["fit"] = fit;
  }
  return j.dump(2) + "\n";
}

ParamsFile params_from_json(std::string_view text) {
  const json j = parse_json(text, "params");
  if (!j.is_object()) throw_schema("params: top level must be an object");
  ParamsFile file;
  const json& tasks = need(j, "tasks", "params");
  if (!tasks.is_array() || tasks.empty()) throw_schema("params: key 'tasks' must be a non-empty array");
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const std::string where = "params: tasks[" + std::to_string(k) + "]";
    file.params.task_ids.push_back(string_value(need(tasks[k], "id", where), "tasks[].id"));
    file.params.betas.push_back(number(need(tasks[k], "beta", where), "tasks[].beta"));
    file.params.gammas.push_back(number(need(tasks[k], "gamma", where), "tasks[].gamma"));
  }
  if (j.contains("num_tasks") && unsigned_value(j["num_tasks"], "num_tasks") != tasks.size()) {
    throw_schema("params: key 'num_tasks' disagrees with the tasks array");
  }
  const json& sigma = need(j, "sigma", "params");
  file.params.sigma = {number(need(sigma, "s11", "params: sigma"), "sigma.s11"),
                       number(need(sigma, "s12", "params: sigma"), "sigma.s12"),
                       number(need(sigma, "s22", "params: sigma"), "sigma.s22")};
  if (!file.params.sigma.is_psd()) throw_schema("params: key 'sigma' is not positive semidefinite");
  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    if (q.contains("points_per_dim")) {
      file.points_per_dim = static_cast<int>(unsigned_value(q["points_per_dim"], "quadrature.points_per_dim"));
    }
  }
  if (j.contains("fit")) {
    const json& f = j["fit"];
    FitProvenance p;
    if (f.contains("converged")) p.converged = bool_value(f["converged"], "fit.converged");
    if (f.contains("final_loglik")) p.final_loglik = number(f["final_loglik"], "fit.final_loglik");
    if (f.contains("em_iterations")) p.em_iterations = unsigned_value(f["em_iterations"], "fit.em_iterations");
    if (f.contains("score_norm")) p.score_norm = number(f["score_norm"], "fit.score_norm");
    if (f.contains("num_persons")) p.num_persons = unsigned_value(f["num_persons"], "fit.num_persons");
    if (f.contains("se_diagnostic")) p.se_diagnostic = string_value(f["se_diagnostic"], "fit.se_diagnostic");
    if (f.contains("std_errors")) {
      std::vector<double> se;
      for (const auto& name : file.params.names()) {
        se.push_back(number(need(f["std_errors"], name.c_str(), "params: fit.std_errors"), "fit.std_errors." + name));
      }
      p.std_errors = std::move(se);
    }
    file.fit = std::move(p);
  }
  return file;
}

void save_params(const std::filesystem::path& path, const ParamsFile& file) {
  write_text_file(path, params_to_json(file));
}

ParamsFile load_params(const std::filesystem::path& path) { return params_from_json(read_text_file(path)); }

ParamsFile make_params_file(const FitResult& fit, std::size_t num_persons) {
  ParamsFile file;
  file.params = fit.params;
  file.points_per_dim = fit.points_per_dim;
  FitProvenance p;
  p.converged = fit.converged;
  p.final_loglik = fit.final_loglik;
  p.em_iterations = fit.em_iterations;
  p.score_norm = fit.score_norm;
  p.std_errors = fit.std_errors;
  p.se_diagnostic = fit.se_diagnostic;
  p.num_persons = num_persons;
  file.fit = std::move(p);
  return file;
}

// ---- person-level tables --------------------------------------------------

std::string write_scores(const std::vector<TraitEstimate>& scores) {
  bool with_map = false;
  for (const auto& s : scores) with_map = with_map || s.map.has_value();
  std::string out = with_map ? "person_id,theta_eap,tau_eap,theta_sd,tau_sd,theta_map,tau_map\n"
                             : "person_id,theta_eap,tau_eap,theta_sd,tau_sd\n";
  for (const auto& s : scores) {
    std::vector<std::string> f{s.person_id, format_double(s.eap.theta), format_double(s.eap.tau),
                               format_double(s.posterior_sd.theta), format_double(s.posterior_sd.tau)};
    if (with_map) {
      f.push_back(s.map ? format_double(s.map->theta) : "");
      f.push_back(s.map ? format_double(s.map->tau) : "");
    }
    out += csv_row(f);
  }
  return out;
}

std::vector<TraitEstimate> parse_scores(std::string_view csv) {
  const CsvTable t = parse_csv(csv);
  const std::size_t cp = t.require_column("person_id", "scores file");
  const std::size_t c1 = t.require_column("theta_eap", "scores file");
  const std::size_t c2 = t.require_column("tau_eap", "scores file");
  const std::size_t c3 = t.require_column("theta_sd", "scores file");
  const std::size_t c4 = t.require_column("tau_sd", "scores file");
  const auto c5 = t.column("theta_map");
  const auto c6 = t.column("tau_map");
  std::vector<TraitEstimate> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string ctx = "scores line " + std::to_string(t.lines[r]);
    TraitEstimate e;
    e.person_id = f[cp];
    e.eap = {parse_double(f[c1], ctx), parse_double(f[c2], ctx)};
    e.posterior_sd = {parse_double(f[c3], ctx), parse_double(f[c4], ctx)};
    if (c5 && c6 && !f[*c5].empty()) e.map = TraitPair{parse_double(f[*c5], ctx), parse_double(f[*c6], ctx)};
    out.push_back(std::move(e));
  }
  return out;
}

std::string write_outcomes(const std::vector<OutcomeRow>& rows) {
  std::string out = "person_id,task_id,success\n";
  for (const auto& r : rows) out += csv_row({r.person_id, r.task_id, r.success ? "1" : "0"});
  return out;
}

std::vector<OutcomeRow> parse_outcomes(std::string_view csv) {
  const CsvTable t = parse_csv(csv);
  const std::size_t cp = t.require_column("person_id", "outcomes file");
  const std::size_t ct = t.require_column("task_id", "outcomes file");
  const std::size_t cs = t.require_column("success", "outcomes file");
  std::vector<OutcomeRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long long v = parse_integer(t.rows[r][cs], "outcomes line " + std::to_string(t.lines[r]));
    if (v != 0 && v != 1) throw_data("outcomes line " + std::to_string(t.lines[r]) + ": success must be 0 or 1");
    out.push_back({t.rows[r][cp], t.rows[r][ct], v == 1});
  }
  return out;
}

std::string write_criterion(const std::vector<CriterionRow>& rows) {
  std::string out = "person_id,criterion\n";
  for (const auto& r : rows) out += csv_row({r.person_id, format_double(r.value)});
  return out;
}

std::vector<CriterionRow> parse_criterion(std::string_view csv) {
  const CsvTable t = parse_csv(csv);
  const std::size_t cp = t.require_column("person_id", "criterion file");
  const std::size_t cv = t.require_column("criterion", "criterion file");
  std::vector<CriterionRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({t.rows[r][cp], parse_double(t.rows[r][cv], "criterion line " + std::to_string(t.lines[r]))});
  }
  return out;
}

std::string write_truth(const std::vector<TruthRow>& rows) {
  std::string out = "person_id,theta,tau\n";
  for (const auto& r : rows) out += csv_row({r.person_id, format_double(r.traits.theta), format_double(r.traits.tau)});
  return out;
}

std::vector<TruthRow> parse_truth(std::string_view csv) {
  const CsvTable t = parse_csv(csv);
  const std::size_t cp = t.require_column("person_id", "truth file");
  const std::size_t c1 = t.require_column("theta", "truth file");
  const std::size_t c2 = t.require_column("tau", "truth file");
  std::vector<TruthRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string ctx = "truth line " + std::to_string(t.lines[r]);
    out.push_back({t.rows[r][cp], {parse_double(t.rows[r][c1], ctx), parse_double(t.rows[r][c2], ctx)}});
  }
  return out;
}

// ---- run configuration ----------------------------------------------------

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json j = parse_json(text, "config");
  if (!j.is_object()) throw_schema("config: top level must be an object");
  reject_unknown(j,
                 {"tasks", "params", "logs", "setting", "persons", "rho", "seed", "replications", "max_steps",
                  "first_action", "em", "scoring", "bootstrap"},
                 "config");
  RunConfig c;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };

  const json& tasks = need(j, "tasks", "config");
  if (!tasks.is_array() || tasks.empty()) throw_schema("config: key 'tasks' must be a non-empty array");
  const auto builtins = builtin_task_names();
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const std::string key = "tasks[" + std::to_string(k) + "]";
    const std::string entry = string_value(tasks[k], key);
    if (std::find(builtins.begin(), builtins.end(), entry) != builtins.end()) {
      c.tasks.push_back(entry);
      continue;
    }
    const auto path = resolve(entry);
    if (!std::filesystem::exists(path)) schema_at("config", "key '" + key + "': task file not found: " + path.string());
    c.tasks.push_back(path.string());
  }
  if (j.contains("params")) c.params = resolve(string_value(j["params"], "params"));
  if (j.contains("logs")) c.logs = resolve(string_value(j["logs"], "logs"));
  if (j.contains("setting")) c.setting = string_value(j["setting"], "setting");
  if (j.contains("persons")) c.persons = unsigned_value(j["persons"], "persons");
  if (j.contains("rho")) c.rho = number(j["rho"], "rho");
  if (j.contains("seed")) c.seed = unsigned_value(j["seed"], "seed");
  if (j.contains("replications")) c.replications = unsigned_value(j["replications"], "replications");
  if (j.contains("max_steps")) c.max_steps = unsigned_value(j["max_steps"], "max_steps");
  if (j.contains("first_action")) {
    const json& f = j["first_action"];
    reject_unknown(f, {"kind", "seconds"}, "config: first_action");
    FirstActionModel m;
    const std::string kind = string_value(need(f, "kind", "config: first_action"), "first_action.kind");
    if (kind == "exponential") {
      m.kind = FirstActionModel::Kind::exponential;
    } else if (kind == "fixed") {
      m.kind = FirstActionModel::Kind::fixed;
      m.fixed_seconds = number(need(f, "seconds", "config: first_action"), "first_action.seconds");
    } else {
      throw_schema("config: key 'first_action.kind' must be \"exponential\" or \"fixed\"");
    }
    c.first_action = m;
  }
  if (j.contains("em")) {
    const json& e = j["em"];
    reject_unknown(e, {"points_per_dim", "max_iters", "loglik_tol", "param_tol", "score_tol", "standard_errors"},
                   "config: em");
    if (e.contains("points_per_dim")) c.em.points_per_dim = static_cast<int>(unsigned_value(e["points_per_dim"], "em.points_per_dim"));
    if (e.contains("max_iters")) c.em.max_iters = unsigned_value(e["max_iters"], "em.max_iters");
    if (e.contains("loglik_tol")) c.em.loglik_tol = number(e["loglik_tol"], "em.loglik_tol");
    if (e.contains("param_tol")) c.em.param_tol = number(e["param_tol"], "em.param_tol");
    if (e.contains("score_tol")) c.em.score_tol = number(e["score_tol"], "em.score_tol");
    if (e.contains("standard_errors")) c.em.compute_standard_errors = bool_value(e["standard_errors"], "em.standard_errors");
  }
  if (j.contains("scoring")) {
    const json& s = j["scoring"];
    reject_unknown(s, {"points_per_dim", "map"}, "config: scoring");
    if (s.contains("points_per_dim")) c.scoring.points_per_dim = static_cast<int>(unsigned_value(s["points_per_dim"], "scoring.points_per_dim"));
    if (s.contains("map")) c.scoring.compute_map = bool_value(s["map"], "scoring.map");
  }
  if (j.contains("bootstrap")) {
    const json& b = j["bootstrap"];
    reject_unknown(b, {"reps", "seed"}, "config: bootstrap");
    if (b.contains("reps")) c.bootstrap.reps = unsigned_value(b["reps"], "bootstrap.reps");
    if (b.contains("seed")) c.bootstrap.seed = unsigned_value(b["seed"], "bootstrap.seed");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_usage("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::vector<TaskDefinition> config_tasks(const RunConfig& config) {
  std::vector<TaskDefinition> out;
  for (const auto& t : config.tasks) out.push_back(resolve_task(t));
  return out;
}

}  // namespace ctdc
