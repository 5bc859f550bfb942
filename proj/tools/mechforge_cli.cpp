// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// mechforge command-line tool.
//
// Exit status: 0 success, 1 domain failure (invalid machine, empty batch,
// bad input document), 2 I/O error, 3 remote generator failure.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "mechforge/gateway.hpp"
#include "mechforge/plot.hpp"
#include "mechforge/search.hpp"
#include "mechforge/tasks.hpp"

#ifndef MECHFORGE_VERSION
#define MECHFORGE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace mechforge;

namespace {

enum Exit { kOk = 0, kDomain = 1, kIo = 2, kRemote = 3 };

struct CliFailure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kIo, "cannot read " + path};
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) throw CliFailure{kIo, "error reading " + path};
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliFailure{kIo, "cannot write " + path.string()};
  out << text;
  if (!out) throw CliFailure{kIo, "error writing " + path.string()};
}

// A global pose document is an array whose records carry "Position".
bool is_global_document(const std::string& text) {
  try {
    const Json doc = Json::parse(extract_fenced(text));
    return doc.is_array() && !doc.empty() && doc[0].is_object() && doc[0].contains("Position");
  } catch (const Json::exception&) {
    return false;
  }
}

struct LoadedMachine {
  std::optional<ConstructionTree> tree;
  ValidityReport validity;
  std::string conversion_error;
};

LoadedMachine load_machine(const std::string& path) {
  const std::string text = read_file(path);
  LoadedMachine m;
  if (is_global_document(text)) {
    try {
      m.tree = from_global(Json::parse(extract_fenced(text)));
      m.validity = machine_validity(*m.tree);
    } catch (const std::exception& e) {
      m.conversion_error = e.what();
    }
    return m;
  }
  m.validity = machine_validity(text);
  ParseResult pr = parse_tree(extract_fenced(text));
  if (pr.ok()) m.tree = std::move(pr.tree);
  return m;
}

ConstructionTree require_tree(const LoadedMachine& m, const std::string& path) {
  if (!m.conversion_error.empty()) throw CliFailure{kDomain, path + ": " + m.conversion_error};
  if (!m.tree) {
    std::string why = m.validity.parse_diagnostics.empty() ? "unparseable" : m.validity.parse_diagnostics[0].message;
    throw CliFailure{kDomain, path + ": " + why};
  }
  return *m.tree;
}

Scenario require_scenario(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_scenario(text);
  } catch (const ScenarioError& e) {
    throw CliFailure{kDomain, path + ": " + e.what()};
  }
}

Json validity_json(const LoadedMachine& m) {
  const ValidityReport& v = m.validity;
  Json j;
  j["file_valid"] = v.file_valid && m.conversion_error.empty();
  j["spatial_valid"] = v.spatial_valid;
  j["within_limits"] = v.within_limits;
  j["overall"] = v.overall;
  if (v.dims) j["dims"] = {{"length_z", v.dims->length_z}, {"width_x", v.dims->width_x}, {"height_y", v.dims->height_y}};
  Json problems = Json::array();
  if (!m.conversion_error.empty()) problems.push_back({{"kind", "Conversion"}, {"message", m.conversion_error}});
  for (const ParseDiagnostic& d : v.parse_diagnostics) {
    problems.push_back({{"kind", std::string(to_string(d.kind))}, {"index", d.index}, {"message", d.message}});
  }
  for (const StructureViolation& s : v.structure_violations) {
    problems.push_back({{"kind", std::string(to_string(s.kind))}, {"node", s.node}, {"message", s.message}});
  }
  for (const CollisionPair& c : v.collisions) {
    problems.push_back({{"kind", "Collision"}, {"a", c.a}, {"b", c.b}});
  }
  j["problems"] = std::move(problems);
  return j;
}

void print_validity(const LoadedMachine& m) {
  const ValidityReport& v = m.validity;
  auto flag = [](bool b) { return b ? "valid" : "invalid"; };
  std::cout << "file: " << flag(v.file_valid && m.conversion_error.empty()) << "\n";
  std::cout << "spatial: " << flag(v.spatial_valid) << "\n";
  if (v.dims) {
    std::cout << "size: " << v.dims->length_z << " x " << v.dims->width_x << " x " << v.dims->height_y
              << " (z x x x y), " << (v.within_limits ? "within limits" : "exceeds limits") << "\n";
  }
  std::cout << "overall: " << flag(v.overall) << "\n";
  if (!m.conversion_error.empty()) std::cout << "  conversion: " << m.conversion_error << "\n";
  for (const ParseDiagnostic& d : v.parse_diagnostics) std::cout << "  parse: " << d.message << "\n";
  for (const StructureViolation& s : v.structure_violations) {
    std::cout << "  structure [" << s.node << "]: " << s.message << "\n";
  }
  for (const CollisionPair& c : v.collisions) {
    std::cout << "  overlap: blocks " << c.a << " and " << c.b << "\n";
  }
}

// ---------------------------------------------------------------- commands

int cmd_validate(const std::string& machine, bool json) {
  const LoadedMachine m = load_machine(machine);
  if (json) {
    std::cout << validity_json(m).dump(2) << "\n";
  } else {
    print_validity(m);
  }
  return m.validity.overall ? kOk : kDomain;
}

int cmd_resolve(const std::string& machine, const std::string& out) {
  const ConstructionTree tree = require_tree(load_machine(machine), machine);
  const StructureReport sr = validate_structure(tree);
  if (!sr.ok()) throw CliFailure{kDomain, machine + ": " + sr.violations[0].message};
  const ResolvedMachine r = resolve(tree);
  Json blocks = Json::array();
  for (const ResolvedBlock& b : r.blocks) {
    Json j;
    j["id"] = b.id;
    j["type"] = b.type;
    j["name"] = block_spec(b.type).name;
    j["position"] = Json::array({b.position.x(), b.position.y(), b.position.z()});
    j["orientation"] = std::string(to_string(b.orientation));
    const Vec3 c = b.center();
    j["center"] = Json::array({c.x(), c.y(), c.z()});
    if (b.endpoints) {
      const auto& [a, e] = *b.endpoints;
      j["endpoints"] = Json::array({Json::array({a.x(), a.y(), a.z()}), Json::array({e.x(), e.y(), e.z()})});
    }
    blocks.push_back(std::move(j));
  }
  Json doc;
  doc["blocks"] = std::move(blocks);
  Json links = Json::array();
  for (const auto& [a, b] : r.auto_connections) links.push_back(Json::array({a, b}));
  doc["auto_connections"] = std::move(links);
  const std::string text = doc.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kOk;
}

int cmd_convert(const std::string& machine, const std::string& to, const std::string& out) {
  const ConstructionTree tree = require_tree(load_machine(machine), machine);
  std::string text;
  if (to == "tree") {
    text = format_tree(tree);
  } else {
    const StructureReport sr = validate_structure(tree);
    if (!sr.ok()) throw CliFailure{kDomain, machine + ": " + sr.violations[0].message};
    text = to_global(tree).dump(2) + "\n";
  }
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kOk;
}

int cmd_simulate(const std::string& machine, const std::string& scenario_path, const std::string& out_dir,
                 const std::string& plot, const std::string& query) {
  const Scenario scenario = require_scenario(scenario_path);
  const LoadedMachine m = load_machine(machine);
  if (!m.validity.overall) {
    print_validity(m);
    return kDomain;
  }
  std::optional<std::vector<QueryEntry>> q;
  if (!query.empty()) {
    try {
      q = parse_query(read_file(query));
    } catch (const QueryFormatError& e) {
      throw CliFailure{kDomain, query + ": " + e.what()};
    }
  }
  const Evaluation e = evaluate(*m.tree, scenario);
  const fs::path dir(out_dir);
  write_file(dir / "trace.jsonl", trace_to_jsonl(*e.trace));
  write_file(dir / "feedback.json", feedback_to_json(*e.feedback).dump(2) + "\n");
  if (q) write_file(dir / "query.json", query_results_to_json(query_feedback(*e.trace, *q)).dump(2) + "\n");
  if (!plot.empty()) write_file(plot, trajectory_svg(*e.trace, scenario));
  std::cout << format_feedback(*e.feedback);
  std::cout << "is_valid: " << (e.reward.is_valid ? "true" : "false") << "\n";
  std::cout << "performance: " << e.reward.performance << "\n";
  std::cout << "R: " << e.reward.R << "\n";
  return kOk;
}

int cmd_score(const std::string& machine, const std::string& scenario_path, bool json) {
  const Scenario scenario = require_scenario(scenario_path);
  const LoadedMachine m = load_machine(machine);
  Reward r;
  if (m.tree && m.validity.overall) r = evaluate(*m.tree, scenario).reward;
  if (json) {
    Json j;
    j["validity"] = validity_json(m);
    j["is_valid"] = r.is_valid;
    j["performance"] = r.performance;
    j["R"] = r.R;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "machine: " << (m.validity.overall ? "valid" : "invalid") << "\n";
    std::cout << "is_valid: " << (r.is_valid ? "true" : "false") << "\n";
    std::cout << "performance: " << r.performance << "\n";
    std::cout << "R: " << r.R << "\n";
  }
  return m.validity.overall ? kOk : kDomain;
}

std::vector<RunRecord> run_records(const std::vector<SimulationRecord>& records) {
  std::vector<RunRecord> out;
  for (const SimulationRecord& r : records) {
    if (r.origin == RecordOrigin::Initial) continue;
    out.push_back({r.file_valid, r.spatial_valid, r.machine_valid, r.score});
  }
  return out;
}

std::string opt_text(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

void print_metrics(const BatchMetrics& m) {
  std::cout << "runs: " << m.total << "\n";
  std::cout << "file validity: " << m.file_valid << "/" << m.total << " (" << opt_text(m.file_rate) << ")\n";
  std::cout << "spatial validity: " << m.spatial_valid << "/" << m.file_valid << " (" << opt_text(m.spatial_rate)
            << ")\n";
  std::cout << "machine validity: " << m.machine_valid << "/" << m.total << " (" << opt_text(m.machine_rate) << ")\n";
  std::cout << "Mean & Max & Std: " << opt_text(m.mean) << " & " << opt_text(m.max) << " & " << opt_text(m.stddev)
            << "\n";
  std::cout << m.machine_valid << "/" << m.total << "  mean " << opt_text(m.mean) << "\n";
}

struct SearchOptions {
  std::string scenario;
  std::string machine;
  std::string strategy = "mcts";
  std::string generator = "mutate";
  std::string out_dir = "search-out";
  SearchConfig config;
  std::optional<int> max_iter;
  MutationPolicy policy;
  bool verbose = false;
};

int cmd_search(SearchOptions opt) {
  const Scenario scenario = require_scenario(opt.scenario);
  ConstructionTree initial;
  if (opt.machine.empty()) {
    initial.nodes.push_back(ConstructionNode{kRootType, 0, Attachment{-1, -1}, std::nullopt});
  } else {
    initial = require_tree(load_machine(opt.machine), opt.machine);
  }
  if (!machine_validity(initial).overall) throw CliFailure{kDomain, "initial machine is not valid"};
  SearchConfig config = opt.config;
  config.max_iter = opt.max_iter.value_or(config.rounds);
  opt.policy.seed = config.seed;

  std::unique_ptr<Generator> gen;
  Json gen_settings;
  const fs::path dir(opt.out_dir);
  std::unique_ptr<JsonlLog> wire_log;
  if (opt.generator == "mutate") {
    try {
      gen = std::make_unique<MutationGenerator>(opt.policy);
    } catch (const std::invalid_argument& e) {
      throw CliFailure{kDomain, e.what()};
    }
    gen_settings = policy_to_json(opt.policy);
  } else {
    RemoteEndpoint endpoint = endpoint_from_env();
    if (endpoint.base_url.empty()) throw CliFailure{kRemote, "MECHFORGE_ENDPOINT_URL is not set"};
    auto llm = std::make_unique<LlmGenerator>(endpoint, http_transport(endpoint));
    if (opt.verbose) {
      std::error_code ec;
      fs::create_directories(dir, ec);
      fs::remove(dir / "requests.jsonl", ec);
      wire_log = std::make_unique<JsonlLog>((dir / "requests.jsonl").string());
      llm->set_trace([log = wire_log.get()](const Json& j) { log->write(j); });
    }
    gen = std::move(llm);
    gen_settings = endpoint_to_json(endpoint);
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliFailure{kIo, "cannot create " + dir.string()};
  const fs::path log_path = dir / "search.jsonl";
  fs::remove(log_path, ec);
  std::unique_ptr<JsonlLog> log;
  try {
    log = std::make_unique<JsonlLog>(log_path.string());
  } catch (const std::runtime_error& e) {
    throw CliFailure{kIo, e.what()};
  }

  RunManifest manifest;
  manifest.tool_version = MECHFORGE_VERSION;
  manifest.scenario = format_scenario(scenario);
  manifest.seed = config.seed;
  manifest.generator = gen->id();
  manifest.generator_settings = gen_settings;
  manifest.strategy = opt.strategy;
  manifest.search_config = search_config_to_json(config);
  manifest.started_at = utc_timestamp();

  const SimulationEnvironment env(scenario);
  auto sink = [&](const SimulationRecord& r) { log->write(record_to_json(r)); };
  SearchResult result;
  try {
    if (opt.strategy == "random") {
      result = random_search(env, *gen, initial, config, sink);
    } else if (opt.strategy == "best-of-n") {
      result = best_of_n(env, *gen, initial, config, sink);
    } else {
      result = mcts(env, *gen, initial, config, sink);
    }
  } catch (const RemoteFailure& e) {
    throw CliFailure{kRemote, e.what()};
  }
  manifest.finished_at = utc_timestamp();

  write_file(dir / "best.json", format_tree(result.machine));
  const std::vector<RunRecord> runs = run_records(result.records);
  Json summary;
  summary["returned_score"] = result.score ? Json(*result.score) : Json(nullptr);
  summary["best_logged_score"] = result.best_score ? Json(*result.best_score) : Json(nullptr);
  summary["simulations"] = result.stats.simulations;
  summary["generator_calls"] = result.stats.generator_calls;
  const auto avg_i = node_expansions(result.stats);
  summary["avg_expansions"] = avg_i ? Json(*avg_i) : Json(nullptr);
  std::optional<BatchMetrics> metrics;
  if (!runs.empty()) {
    metrics = batch_metrics(runs);
    summary["candidates"] = metrics_to_json(*metrics);
  }
  manifest.summary = summary;
  manifest.outputs = {{"best_machine", (dir / "best.json").string()},
                      {"log", log_path.string()},
                      {"manifest", (dir / "manifest.json").string()}};
  write_file(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");

  std::cout << "strategy " << opt.strategy << ", generator " << gen->id() << ", " << result.stats.simulations
            << " simulations, " << result.stats.generator_calls << " generator calls, Avg.I " << opt_text(avg_i)
            << "\n";
  std::cout << "returned score: " << opt_text(result.score) << "\n";
  std::cout << "best logged score: " << opt_text(result.best_score) << "\n";
  if (metrics) print_metrics(*metrics);
  std::cout << "wrote " << (dir / "best.json").string() << ", " << log_path.string() << ", "
            << (dir / "manifest.json").string() << "\n";
  return kOk;
}

int cmd_metrics(const std::vector<std::string>& logs, bool json) {
  std::vector<RunRecord> runs;
  for (const std::string& path : logs) {
    std::vector<SimulationRecord> records;
    try {
      records = read_log(path);
    } catch (const std::runtime_error& e) {
      throw CliFailure{fs::exists(path) ? kDomain : kIo, e.what()};
    }
    const std::vector<RunRecord> r = run_records(records);
    runs.insert(runs.end(), r.begin(), r.end());
  }
  if (runs.empty()) throw CliFailure{kDomain, "empty batch: no candidate records in the given logs"};
  const BatchMetrics m = batch_metrics(runs);
  if (json) {
    std::cout << metrics_to_json(m).dump(2) << "\n";
  } else {
    print_metrics(m);
  }
  return kOk;
}

int cmd_export_catalog(const std::string& out) {
  const std::string text = catalog_to_json().dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mechforge: build, simulate and search block machines"};
  app.set_version_flag("--version", MECHFORGE_VERSION);
  app.require_subcommand(1);

  std::string machine, scenario, out, to = "global", plot, query, out_dir = ".";
  bool json = false;
  std::vector<std::string> logs;

  auto* validate = app.add_subcommand("validate", "Check file, spatial and size validity");
  validate->add_option("machine", machine, "Machine file (construction tree or global document)")->required();
  validate->add_flag("--json", json, "Print the report as JSON");

  auto* resolve_cmd = app.add_subcommand("resolve", "Print global block poses");
  resolve_cmd->add_option("machine", machine)->required();
  resolve_cmd->add_option("-o,--out", out, "Output file (default stdout)");

  auto* convert = app.add_subcommand("convert", "Convert between construction tree and global document");
  convert->add_option("machine", machine)->required();
  convert->add_option("--to", to, "Target representation")->check(CLI::IsMember({"tree", "global"}));
  convert->add_option("-o,--out", out, "Output file (default stdout)");

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a machine and write its trace and feedback");
  simulate_cmd->add_option("machine", machine)->required();
  simulate_cmd->add_option("scenario", scenario)->required();
  simulate_cmd->add_option("-o,--out-dir", out_dir, "Directory for trace.jsonl and feedback.json");
  simulate_cmd->add_option("--plot", plot, "Also write a trajectory plot (SVG)");
  simulate_cmd->add_option("--query", query, "Feedback request file; answers go to query.json");

  auto* score = app.add_subcommand("score", "Print the task reward of a machine");
  score->add_option("machine", machine)->required();
  score->add_option("scenario", scenario)->required();
  score->add_flag("--json", json);

  SearchOptions sopt;
  auto* search = app.add_subcommand("search", "Search for better machines");
  search->add_option("scenario", sopt.scenario)->required();
  search->add_option("--machine", sopt.machine, "Initial machine (default: the root block alone)");
  search->add_option("--strategy", sopt.strategy)->check(CLI::IsMember({"random", "best-of-n", "mcts"}));
  search->add_option("--generator", sopt.generator)->check(CLI::IsMember({"mutate", "llm"}));
  search->add_option("--rounds", sopt.config.rounds, "Rounds (also MCTS iterations unless --max-iter is given)")
      ->check(CLI::NonNegativeNumber);
  search->add_option("--n", sopt.config.samples, "Candidates per round for best-of-n")->check(CLI::PositiveNumber);
  search->add_option("--max-iter", sopt.max_iter, "MCTS iterations")->check(CLI::NonNegativeNumber);
  search->add_option("--max-retry", sopt.config.max_retry)->check(CLI::PositiveNumber);
  search->add_option("--children", sopt.config.children, "MCTS children per expansion")->check(CLI::PositiveNumber);
  search->add_option("--exploration", sopt.config.exploration, "UCB exploration constant");
  search->add_option("--seed", sopt.config.seed);
  search->add_option("--jobs", sopt.config.jobs, "Parallel candidate evaluations")->check(CLI::PositiveNumber);
  search->add_option("--add-weight", sopt.policy.add_weight);
  search->add_option("--remove-weight", sopt.policy.remove_weight);
  search->add_option("--move-weight", sopt.policy.move_weight);
  search->add_option("--max-edits", sopt.policy.max_edits)->check(CLI::PositiveNumber);
  search->add_option("-o,--out-dir", sopt.out_dir, "Directory for best.json, search.jsonl, manifest.json");
  search->add_flag("-v,--verbose", sopt.verbose, "Log generator requests and replies");

  auto* metrics = app.add_subcommand("metrics", "Aggregate validity rates and scores from search logs");
  metrics->add_option("logs", logs)->required();
  metrics->add_flag("--json", json);

  auto* export_catalog = app.add_subcommand("export-catalog", "Write the block catalog as JSON");
  export_catalog->add_option("-o,--out", out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kIo;  // usage errors share the I/O exit code
  }

  try {
    if (*validate) return cmd_validate(machine, json);
    if (*resolve_cmd) return cmd_resolve(machine, out);
    if (*convert) return cmd_convert(machine, to, out);
    if (*simulate_cmd) return cmd_simulate(machine, scenario, out_dir, plot, query);
    if (*score) return cmd_score(machine, scenario, json);
    if (*search) return cmd_search(sopt);
    if (*metrics) return cmd_metrics(logs, json);
    if (*export_catalog) return cmd_export_catalog(out);
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  }
  return kOk;
}
