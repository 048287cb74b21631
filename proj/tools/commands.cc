// Copyright 2026 The genmatch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "commands.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "genmatch/core.h"
#include "genmatch/evaluate.h"
#include "genmatch/matcher.h"
#include "genmatch/sim.h"
#include "json.hpp"

namespace genmatch::cli {
namespace {

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> SplitList(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string item = Trim(text.substr(pos, end - pos));
    if (!item.empty()) out.push_back(std::move(item));
    pos = end + 1;
  }
  return out;
}

std::optional<double> ParseDouble(std::string_view text) {
  const std::string t = Trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidInput("failed writing " + path.string());
}

std::filesystem::path PrepareOutputDir(const std::string& dir) {
  std::filesystem::path p = dir.empty() ? "." : dir;
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw InvalidInput("cannot create output directory " + p.string());
  return p;
}

unsigned ThreadsFromEnvironment(std::optional<unsigned> flag) {
  if (flag) return *flag;
  const char* env = std::getenv("GENMATCH_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  unsigned v = 0;
  const std::string_view s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidInput("GENMATCH_THREADS must be a non-negative integer");
  }
  return v;
}

// Column roles and model settings shared by match and evaluate.
struct DataOptions {
  std::string input;
  std::string treatment_col;
  std::string covariate_cols;
  std::string id_col;
  std::string outcome_col;
  std::string treated_value = "1";
  std::string constraints;
  std::string metric = "euclidean";
};

void AddDataOptions(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--input", o.input, "CSV file with a header row")->required();
  cmd->add_option("--treatment-col", o.treatment_col, "treatment column")
      ->required();
  cmd->add_option("--covariate-cols", o.covariate_cols,
                  "comma-separated covariates (default: every other column)");
  cmd->add_option("--id-col", o.id_col, "unit id column (default: row number)");
  cmd->add_option("--outcome-col", o.outcome_col, "outcome column for the ATT");
  cmd->add_option("--treated-value", o.treated_value,
                  "treatment value marking treated units")
      ->capture_default_str();
  cmd->add_option("--constraints", o.constraints,
                  "c1,...,ck,t with conditions in order of first appearance "
                  "(default: 1,...,1,k)");
  cmd->add_option("--metric", o.metric, "euclidean, mahalanobis or scalar")
      ->capture_default_str();
}

struct LoadedData {
  std::optional<Sample> sample;
  std::vector<std::string> ids;
  std::optional<std::vector<double>> outcomes;
  Condition treated = 0;
  bool has_treated_label = false;
  Constraints constraints;
  std::optional<Metric> metric;
};

LoadedData LoadData(const DataOptions& o) {
  const CsvTable table = ReadCsv(o.input);
  if (table.rows.empty()) throw InvalidInput(o.input + " has no data rows");
  const std::size_t treat_col = table.Column(o.treatment_col);
  std::optional<std::size_t> id_col;
  if (!o.id_col.empty()) id_col = table.Column(o.id_col);
  std::optional<std::size_t> outcome_col;
  if (!o.outcome_col.empty()) outcome_col = table.Column(o.outcome_col);

  std::vector<std::size_t> cov_cols;
  if (o.covariate_cols.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c == treat_col || c == id_col || c == outcome_col) continue;
      cov_cols.push_back(c);
    }
  } else {
    for (const auto& name : SplitList(o.covariate_cols)) {
      cov_cols.push_back(table.Column(name));
    }
  }
  if (cov_cols.empty()) throw InvalidInput("no covariate columns selected");

  const std::size_t n = table.rows.size();
  const std::size_t d = cov_cols.size();
  // Conditions are numbered in order of first appearance.
  std::vector<std::string> labels;
  std::map<std::string, Condition> index;
  for (const auto& row : table.rows) {
    std::string label = Trim(row[treat_col]);
    if (index.emplace(label, static_cast<Condition>(labels.size())).second) {
      labels.push_back(std::move(label));
    }
  }

  LoadedData data;
  std::vector<double> x(n * d);
  std::vector<Condition> w(n);
  std::unordered_map<std::string, std::size_t> seen;
  if (outcome_col) data.outcomes.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = i + 2;
    for (std::size_t c = 0; c < d; ++c) {
      const auto v = ParseDouble(row[cov_cols[c]]);
      if (!v) {
        throw InvalidInput("line " + std::to_string(line) + ": column '" +
                           table.header[cov_cols[c]] + "' is not a number");
      }
      x[i * d + c] = *v;
    }
    w[i] = index.at(Trim(row[treat_col]));
    if (outcome_col) {
      const auto v = ParseDouble(row[*outcome_col]);
      if (!v) {
        throw InvalidInput("line " + std::to_string(line) +
                           ": outcome is not a number");
      }
      (*data.outcomes)[i] = *v;
    }
    std::string id = id_col ? Trim(row[*id_col]) : std::to_string(i + 1);
    if (!seen.emplace(id, i).second) {
      throw InvalidInput("duplicate unit id '" + id + "'");
    }
    data.ids.push_back(std::move(id));
  }
  data.sample =
      Sample::FromConditions(std::move(x), d, std::move(w), labels.size(), labels);
  const Sample& sample = *data.sample;
  if (auto t = sample.FindCondition(o.treated_value)) {
    data.treated = *t;
    data.has_treated_label = true;
  } else if (sample.num_conditions() == 2) {
    throw InvalidInput("treatment value '" + o.treated_value +
                       "' does not occur in column '" + o.treatment_col + "'");
  }
  data.constraints = o.constraints.empty()
                         ? Constraints::Traditional(sample.num_conditions())
                         : Constraints::Parse(o.constraints);
  if (data.constraints.per_condition.size() != sample.num_conditions()) {
    throw InvalidInput("constraints need " +
                       std::to_string(sample.num_conditions() + 1) +
                       " entries for " + std::to_string(sample.num_conditions()) +
                       " observed conditions");
  }
  data.metric = Metric::ForSample(ParseMetricKind(o.metric), sample);
  return data;
}

std::string UnitList(const std::vector<Unit>& units,
                     const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i > 0) out += ", ";
    out += ids[units[i]];
  }
  return out;
}

std::string MatchesCsv(const Matching& m, const MatchReport& report,
                       const std::vector<std::string>& ids) {
  std::ostringstream out;
  out << "id,group,weight\n";
  for (Unit u = 0; u < m.num_units(); ++u) {
    out << ids[u] << ',';
    if (m.label(u) != kUnassigned) out << (m.label(u) + 1);
    out << ',';
    if (!report.weights.empty()) out << FormatDouble(report.weights[u]);
    out << '\n';
  }
  return out.str();
}

std::string ReportText(const MatchReport& report) {
  return ReportToJson(report).dump(2) + "\n";
}

struct MatchArgs {
  DataOptions data;
  std::optional<double> caliper_gc;
  std::optional<double> caliper_step5;
  bool refined_seeds = false;
  bool global_step5 = false;
  std::string focus = "all";
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

std::vector<Unit> ReadFocusFile(const std::string& path,
                                const std::vector<std::string>& ids) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read focus file " + path);
  std::unordered_map<std::string, Unit> lookup;
  for (Unit u = 0; u < ids.size(); ++u) lookup[ids[u]] = u;
  std::vector<Unit> units;
  std::string line;
  while (std::getline(in, line)) {
    const std::string id = Trim(line);
    if (id.empty()) continue;
    auto it = lookup.find(id);
    if (it == lookup.end()) {
      throw InvalidInput("focus file names unknown unit id '" + id + "'");
    }
    units.push_back(it->second);
  }
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  if (units.empty()) throw InvalidInput("focus file " + path + " is empty");
  return units;
}

int RunMatch(const MatchArgs& a, std::ostream& out, std::ostream& err) {
  const LoadedData data = LoadData(a.data);
  const Sample& sample = *data.sample;
  const MetricSpace space(sample, *data.metric);

  MatchOptions options;
  options.use_refined_seeds = a.refined_seeds;
  options.global_step5 = a.global_step5;
  options.caliper_gc = a.caliper_gc;
  options.caliper_step5 = a.caliper_step5;
  options.num_threads = ThreadsFromEnvironment(a.threads);
  if (a.focus == "treated") {
    if (!data.has_treated_label) {
      throw InvalidInput("--focus treated needs the treated value in the data");
    }
    const auto t = sample.members(data.treated);
    options.focus_set.emplace(t.begin(), t.end());
  } else if (a.focus != "all") {
    options.focus_set = ReadFocusFile(a.focus, data.ids);
  }

  MatchResult result;
  try {
    result = FullMatchDetailed(space, data.constraints, options);
  } catch (const Infeasible& e) {
    if (e.units().empty()) {
      err << "infeasible: " << e.what() << '\n';
    } else {
      err << "infeasible: no unit can anchor a group; " << e.units().size()
          << " units cannot meet the constraints within the caliper: "
          << UnitList(e.units(), data.ids) << '\n';
    }
    return kExitInfeasible;
  }
  const auto infeasible = result.digraph.infeasible_units();
  if (!infeasible.empty()) {
    err << "warning: " << infeasible.size()
        << " units cannot meet the constraints within the caliper: "
        << UnitList(infeasible, data.ids) << '\n';
  }

  std::optional<std::span<const double>> outcomes;
  if (data.outcomes) outcomes = std::span<const double>(*data.outcomes);
  const MatchReport report = BuildReport(result.matching, space,
                                         data.constraints, data.treated, outcomes);
  const auto dir = PrepareOutputDir(a.output_dir);
  WriteFile(dir / "matches.csv", MatchesCsv(result.matching, report, data.ids));
  WriteFile(dir / "report.json", ReportText(report));
  out << "matched " << sample.size() << " units into "
      << report.group_stats.num_groups << " groups ("
      << result.matching.unassigned().size() << " unassigned); wrote "
      << (dir / "matches.csv").string() << " and "
      << (dir / "report.json").string() << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  DataOptions data;
  std::string matches;
  std::string objective;
  bool strict = false;
  std::string output_dir;
};

Matching ReadMatching(const std::string& path,
                      const std::vector<std::string>& ids) {
  const CsvTable table = ReadCsv(path);
  const std::size_t id_col = table.Column("id");
  const std::size_t group_col = table.Column("group");
  std::unordered_map<std::string, Unit> lookup;
  for (Unit u = 0; u < ids.size(); ++u) lookup[ids[u]] = u;
  std::vector<long long> raw(ids.size(), -1);
  std::vector<bool> seen(ids.size(), false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string id = Trim(table.rows[r][id_col]);
    auto it = lookup.find(id);
    if (it == lookup.end()) {
      throw InvalidInput("matches file names unknown unit id '" + id + "'");
    }
    if (seen[it->second]) {
      throw InvalidInput("matches file lists unit id '" + id + "' twice");
    }
    seen[it->second] = true;
    const std::string g = Trim(table.rows[r][group_col]);
    if (g.empty()) continue;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), v);
    if (ec != std::errc() || ptr != g.data() + g.size() || v < 1) {
      throw InvalidInput("line " + std::to_string(r + 2) +
                         ": group must be a positive integer or empty");
    }
    raw[it->second] = v;
  }
  for (Unit u = 0; u < ids.size(); ++u) {
    if (!seen[u]) {
      throw InvalidInput("matches file is missing unit id '" + ids[u] + "'");
    }
  }
  // Renumber group ids in ascending order so gaps from hand edits close up.
  std::set<long long> distinct;
  for (long long v : raw) {
    if (v >= 0) distinct.insert(v);
  }
  std::map<long long, GroupId> dense;
  for (long long v : distinct) {
    dense.emplace(v, static_cast<GroupId>(dense.size()));
  }
  std::vector<GroupId> labels(ids.size(), kUnassigned);
  for (Unit u = 0; u < ids.size(); ++u) {
    if (raw[u] >= 0) labels[u] = dense.at(raw[u]);
  }
  return Matching::FromLabels(std::move(labels));
}

int RunEvaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const LoadedData data = LoadData(a.data);
  const Sample& sample = *data.sample;
  const MetricSpace space(sample, *data.metric);
  const Matching matching = ReadMatching(a.matches, data.ids);

  std::optional<Objective> objective;
  if (!a.objective.empty()) objective = ParseObjective(a.objective);
  double objective_value = 0.0;
  if (objective) {
    objective_value =
        EvaluateObjective(matching, space, *objective, data.treated);
  }

  std::optional<std::span<const double>> outcomes;
  if (data.outcomes) outcomes = std::span<const double>(*data.outcomes);
  const MatchReport report =
      BuildReport(matching, space, data.constraints, data.treated, outcomes);
  const auto violations =
      FindConstraintViolations(matching, sample, data.constraints);
  for (const auto& v : violations) {
    err << "warning: " << v.description << '\n';
  }

  if (a.output_dir.empty()) {
    out << ReportText(report);
  } else {
    const auto dir = PrepareOutputDir(a.output_dir);
    WriteFile(dir / "report.json", ReportText(report));
  }
  if (objective) {
    out << ObjectiveName(*objective) << ' ' << FormatDouble(objective_value)
        << '\n';
  }
  if (a.strict && !violations.empty()) {
    err << "error: " << violations.size()
        << " groups violate the constraints\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

struct SimulateArgs {
  std::size_t n = 1000;
  std::size_t reps = 1000;
  std::optional<std::uint64_t> seed;
  std::string methods = "unadjusted,gfm";
  std::string constraints = "1,1,2";
  std::string metric = "euclidean";
  std::optional<unsigned> threads;
  std::string output_dir = ".";
  bool raw = false;
  std::string normalize_to;
};

int RunSimulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  SimConfig config;
  config.n = a.n;
  config.replicates = a.reps;
  if (a.seed) {
    config.seed = *a.seed;
  } else {
    config.seed = std::random_device{}();
    err << "seed: " << config.seed << '\n';
  }
  config.methods = ParseSimMethods(a.methods);
  config.constraints = Constraints::Parse(a.constraints);
  config.metric = ParseMetricKind(a.metric);
  config.threads = ThreadsFromEnvironment(a.threads);
  config.keep_replicates = a.raw;
  config.Validate();
  std::optional<SimMethod> reference;
  if (!a.normalize_to.empty()) {
    reference = ParseSimMethod(a.normalize_to);
    if (std::find(config.methods.begin(), config.methods.end(), *reference) ==
        config.methods.end()) {
      throw InvalidInput("--normalize-to names a method that is not run");
    }
  }

  const SimReport report = RunExperiment(config);
  const auto dir = PrepareOutputDir(a.output_dir);
  WriteFile(dir / "sim_report.csv", report.ToCsv());
  WriteFile(dir / "sim_report.json", report.ToJson().dump(2) + "\n");
  if (reference) {
    const SimReport normalized = report.Normalized(*reference);
    WriteFile(dir / "sim_report_normalized.csv", normalized.ToCsv());
    WriteFile(dir / "sim_report_normalized.json",
              normalized.ToJson().dump(2) + "\n");
  }
  if (a.raw) WriteFile(dir / "sim_replicates.csv", report.ReplicatesCsv());
  out << report.ToCsv();
  return kExitOk;
}

// Splices a flat JSON object given by --config in front of the command-line
// flags, so that flags given explicitly win.
std::vector<std::string> ExpandConfig(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  std::size_t insert_at = args.empty() ? 0 : 1;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw InvalidInput("cannot read config file " + *path);
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config file " + *path + ": " + e.what());
  }
  if (!config.is_object()) {
    throw InvalidInput("config file " + *path + " must hold a JSON object");
  }
  std::vector<std::string> prefix;
  for (const auto& [key, value] : config.items()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag.rfind("--", 0) != 0) flag = "--" + flag;
    if (flag == "--config") continue;
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) prefix.push_back(flag);
      continue;
    }
    prefix.push_back(flag);
    if (value.is_string()) {
      prefix.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ',';
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      prefix.push_back(joined);
    } else {
      prefix.push_back(value.dump());
    }
  }
  std::vector<std::string> expanded(args.begin(), args.begin() + insert_at);
  expanded.insert(expanded.end(), prefix.begin(), prefix.end());
  expanded.insert(expanded.end(), args.begin() + insert_at, args.end());
  return expanded;
}

}  // namespace

std::size_t CsvTable::Column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw InvalidInput("no column named '" + name + "'");
}

CsvTable ParseCsv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t line = 1;
  auto end_record = [&] {
    fields.push_back(std::move(field));
    field.clear();
    if (table.header.empty()) {
      if (fields.front().rfind("\xEF\xBB\xBF", 0) == 0) {
        fields.front().erase(0, 3);  // byte order mark
      }
      for (auto& h : fields) h = Trim(h);
      table.header = std::move(fields);
    } else if (!(fields.size() == 1 && Trim(fields[0]).empty())) {
      if (fields.size() != table.header.size()) {
        throw InvalidInput("line " + std::to_string(line) + " has " +
                           std::to_string(fields.size()) + " fields; header has " +
                           std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
    fields.clear();
    any = false;
  };
  char ch;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    any = true;
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      end_record();
      ++line;
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted) throw InvalidInput("unterminated quoted field");
  if (any || !field.empty() || !fields.empty()) end_record();
  if (table.header.empty()) throw InvalidInput("empty CSV input");
  return table;
}

CsvTable ReadCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path);
  return ParseCsv(in);
}

int Run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Generalized full matching"};
  app.name("genmatch");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;

  MatchArgs match;
  CLI::App* match_cmd = app.add_subcommand("match", "match units into groups");
  AddDataOptions(match_cmd, match.data);
  match_cmd->add_option("--caliper-gc", match.caliper_gc,
                        "longest arc allowed in the nearest-neighbor digraph");
  match_cmd->add_option("--caliper-step5", match.caliper_step5,
                        "longest distance for joining an existing group");
  match_cmd->add_flag("--refined-seeds", match.refined_seeds,
                      "pick seeds fewest-conflicts first");
  match_cmd->add_flag("--global-step5", match.global_step5,
                      "leftover units join the nearest labeled unit overall");
  match_cmd->add_option("--focus", match.focus,
                        "all, treated, or a file of unit ids")
      ->capture_default_str();
  match_cmd->add_option("--output-dir", match.output_dir)->capture_default_str();
  match_cmd->add_option("--seed", match.seed,
                        "accepted for uniformity; matching is deterministic");
  match_cmd->add_option("--threads", match.threads,
                        "worker threads, 0 for all cores (env GENMATCH_THREADS)");
  match_cmd->add_option("--config", config_path, "flat JSON file of flags");

  EvaluateArgs evaluate;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "score an existing matches.csv");
  AddDataOptions(eval_cmd, evaluate.data);
  eval_cmd->add_option("--matches", evaluate.matches, "matches.csv to score")
      ->required();
  eval_cmd->add_option("--objective", evaluate.objective,
                       "also print one objective: lmax, lmax_tc, lmean, "
                       "lmean_tc or lsum_tc");
  eval_cmd->add_flag("--strict", evaluate.strict,
                     "exit 2 when a group violates the constraints");
  eval_cmd->add_option("--output-dir", evaluate.output_dir,
                       "write report.json here instead of standard output");
  eval_cmd->add_option("--config", config_path, "flat JSON file of flags");

  SimulateArgs sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "run the simulation study");
  sim_cmd->add_option("--n", sim.n, "units per replicate")->capture_default_str();
  sim_cmd->add_option("--reps", sim.reps, "replicates")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "random seed (generated if absent)");
  sim_cmd->add_option("--methods", sim.methods,
                      "unadjusted, gfm, gfm_refined, greedy11, replacement11, "
                      "greedy12, oracle")
      ->capture_default_str();
  sim_cmd->add_option("--constraints", sim.constraints)->capture_default_str();
  sim_cmd->add_option("--metric", sim.metric)->capture_default_str();
  sim_cmd->add_option("--threads", sim.threads,
                      "worker threads, 0 for all cores (env GENMATCH_THREADS)");
  sim_cmd->add_option("--output-dir", sim.output_dir)->capture_default_str();
  sim_cmd->add_flag("--raw", sim.raw, "also write per-replicate measures");
  sim_cmd->add_option("--normalize-to", sim.normalize_to,
                      "also write a report relative to this method");
  sim_cmd->add_option("--config", config_path, "flat JSON file of flags");

  try {
    std::vector<std::string> args = ExpandConfig(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << e.what() << '\n';
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    if (app.get_subcommands().size() == 1) {
      err << app.get_subcommands().front()->help();
    }
    return kExitBadInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }

  try {
    if (match_cmd->parsed()) return RunMatch(match, out, err);
    if (eval_cmd->parsed()) return RunEvaluate(evaluate, out, err);
    return RunSimulate(sim, out, err);
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitBadInput;
  }
}

}  // namespace genmatch::cli
