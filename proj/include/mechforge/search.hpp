// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Random search, best-of-n and Monte Carlo tree search over machine designs.
// Strategies talk to an Environment (validity + scoring) and a Generator
// (candidate proposals); both must tolerate concurrent calls.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mechforge/assembly.hpp"
#include "mechforge/scenario.hpp"
#include "mechforge/tasks.hpp"

namespace mechforge {

struct Score {
  bool file_valid = false;
  bool spatial_valid = false;
  bool machine_valid = false;
  bool reward_valid = false;  // machine_valid plus task gates
  double score = 0.0;         // R; zero for invalid machines
  std::optional<FeedbackBundle> feedback;
};

class Environment {
 public:
  virtual ~Environment() = default;
  // Overall machine validity; gates the generator retry loop.
  virtual bool valid(const ConstructionTree& tree) const = 0;
  virtual Score evaluate(const ConstructionTree& tree) const = 0;
  virtual std::string task_description() const { return {}; }
};

class SimulationEnvironment : public Environment {
 public:
  explicit SimulationEnvironment(Scenario scenario) : scenario_(std::move(scenario)) {}
  bool valid(const ConstructionTree& tree) const override;
  Score evaluate(const ConstructionTree& tree) const override;
  std::string task_description() const override;
  const Scenario& scenario() const { return scenario_; }

 private:
  Scenario scenario_;
};

// ------------------------------------------------------------- generators

struct HistoryEntry {
  int round = 0;
  double score = 0.0;
  bool valid = false;
  std::string note;  // e.g. the applied edit commands
};

struct GeneratorContext {
  ConstructionTree machine;
  std::optional<FeedbackBundle> feedback;
  double score = 0.0;
  std::vector<HistoryEntry> history;
  std::string task_text;
};

enum class GenerateErrorKind { Transport, NoMachineInResponse, ParseFailed, BudgetExhausted };
std::string_view to_string(GenerateErrorKind k);

struct GenerateResult {
  std::optional<ConstructionTree> tree;
  std::optional<GenerateErrorKind> error;
  std::string message;
  std::string note;  // free-form description of what was proposed

  static GenerateResult success(ConstructionTree t, std::string note = {});
  static GenerateResult failure(GenerateErrorKind kind, std::string message);
};

class Generator {
 public:
  virtual ~Generator() = default;
  // `seed` is fixed by the search loop per call so results do not depend on
  // scheduling. Must not modify shared state without synchronization.
  virtual GenerateResult generate(const GeneratorContext& ctx, std::uint64_t seed) = 0;
  virtual std::string id() const = 0;
};

// Every attempt of a retry loop failed at the transport level.
class RemoteFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------- search

struct SearchConfig {
  int rounds = 5;         // R
  int samples = 4;        // n for best-of-n
  int max_iter = 5;       // MCTS iterations
  int max_retry = 5;
  int children = 4;       // MCTS children per expansion
  double exploration = 1.414;
  std::uint64_t seed = 0;
  int jobs = 1;
};

enum class RecordOrigin { Initial, Candidate, Fallback };
std::string_view to_string(RecordOrigin o);

// One simulated machine.
struct SimulationRecord {
  int round = 0;            // 0 for the initial machine
  std::vector<int> path;    // child indices from the search root (MCTS) or slot index
  std::uint64_t hash = 0;
  double score = 0.0;
  bool file_valid = false;
  bool spatial_valid = false;
  bool machine_valid = false;
  int retries = 0;          // generator calls spent on this candidate
  RecordOrigin origin = RecordOrigin::Candidate;
};

using RecordSink = std::function<void(const SimulationRecord&)>;

struct SearchStats {
  std::vector<int> expansions_per_round;
  int generator_calls = 0;
  int simulations = 0;
};

// Average node expansions per round; nullopt for zero rounds.
std::optional<double> node_expansions(const SearchStats& stats);

struct SearchNode {
  ConstructionTree machine;
  double score = 0.0;
  int visits = 0;
  double total_reward = 0.0;
  std::optional<FeedbackBundle> feedback;
  std::vector<SearchNode> children;

  double mean() const { return visits > 0 ? total_reward / visits : 0.0; }
};

struct SearchResult {
  ConstructionTree machine;
  std::optional<double> score;  // nullopt when nothing was simulated
  ConstructionTree best_machine;  // highest-scoring machine simulated
  std::optional<double> best_score;
  SearchStats stats;
  std::vector<SimulationRecord> records;
  std::optional<SearchNode> tree;  // MCTS only
};

// Returns the last round's machine and score.
SearchResult random_search(const Environment& env, Generator& gen, const ConstructionTree& initial,
                           const SearchConfig& config, const RecordSink& sink = {});
// Returns the best candidate over all rounds.
SearchResult best_of_n(const Environment& env, Generator& gen, const ConstructionTree& initial,
                       const SearchConfig& config, const RecordSink& sink = {});
// Returns the best-scoring child of the root.
SearchResult mcts(const Environment& env, Generator& gen, const ConstructionTree& initial, const SearchConfig& config,
                  const RecordSink& sink = {});

// mean + c * sqrt(ln(parent_visits) / visits); unvisited children are +inf.
double ucb(const SearchNode& child, int parent_visits, double c);
// Index of the UCB-maximizing child (earliest on ties); -1 if none.
int select_child(const SearchNode& parent, double c);
// Index of the highest-scoring child (earliest on ties); -1 if none.
int best_child(const SearchNode& parent);
// Adds one visit with `reward` to the node at `path` and all its ancestors.
void backpropagate(SearchNode& root, const std::vector<int>& path, double reward);

// ------------------------------------------------------------------- logs

// FNV-1a over the canonical one-node-per-line text of the tree.
std::uint64_t machine_hash(const ConstructionTree& tree);
std::string hash_hex(std::uint64_t h);

Json record_to_json(const SimulationRecord& r);
SimulationRecord record_from_json(const Json& j);

// Append-only JSONL writer.
class JsonlLog {
 public:
  explicit JsonlLog(const std::string& path);  // throws std::runtime_error
  ~JsonlLog();
  JsonlLog(const JsonlLog&) = delete;
  JsonlLog& operator=(const JsonlLog&) = delete;
  void write(const Json& record);

 private:
  struct Impl;
  Impl* impl_;
};

// Reads simulation records from a JSONL log; throws std::runtime_error on I/O
// or malformed lines.
std::vector<SimulationRecord> read_log(const std::string& path);

struct RunManifest {
  std::string tool_version;
  Json scenario;
  std::uint64_t seed = 0;
  std::string generator;
  Json generator_settings;
  std::string strategy;
  Json search_config;
  std::string started_at;
  std::string finished_at;
  Json outputs;
  Json summary;
};

Json manifest_to_json(const RunManifest& m);
Json search_config_to_json(const SearchConfig& c);
// UTC, ISO-8601 with seconds.
std::string utc_timestamp();

}  // namespace mechforge
