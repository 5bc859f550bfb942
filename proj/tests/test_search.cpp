// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>

#include "mechforge/gateway.hpp"
#include "support.hpp"

using namespace mechforge;
using namespace mechforge::testing;

namespace {

// Root plus k chained small blocks; k identifies the proposal.
ConstructionTree numbered(int k) {
  ConstructionTree t{{block(0, 0, -1, -1)}};
  for (int i = 1; i <= k; ++i) t.nodes.push_back(block(15, i, i - 1, 0));
  return t;
}

int number_of(const ConstructionTree& t) { return static_cast<int>(t.size()) - 1; }

// Scores proposal k with scores[k - 1]; the initial machine scores 0. Proposals
// listed in `invalid` fail the validity gate.
class ScriptedEnv : public Environment {
 public:
  explicit ScriptedEnv(std::vector<double> scores, std::vector<int> invalid = {})
      : scores_(std::move(scores)), invalid_(std::move(invalid)) {}

  bool valid(const ConstructionTree& t) const override {
    return std::find(invalid_.begin(), invalid_.end(), number_of(t)) == invalid_.end();
  }

  Score evaluate(const ConstructionTree& t) const override {
    const int k = number_of(t);
    Score s;
    s.file_valid = s.spatial_valid = s.machine_valid = s.reward_valid = valid(t);
    if (k > 0 && s.machine_valid) s.score = scores_.at(static_cast<std::size_t>(k - 1));
    return s;
  }

 private:
  std::vector<double> scores_;
  std::vector<int> invalid_;
};

// Returns proposal 1, 2, 3, ... in call order.
class CountingGenerator : public Generator {
 public:
  GenerateResult generate(const GeneratorContext&, std::uint64_t) override {
    std::lock_guard<std::mutex> lock(mu_);
    return GenerateResult::success(numbered(++calls_));
  }
  std::string id() const override { return "counting"; }
  int calls() const { return calls_; }

 private:
  std::mutex mu_;
  int calls_ = 0;
};

// Always proposes an invalid machine, or always fails.
class HopelessGenerator : public Generator {
 public:
  explicit HopelessGenerator(std::optional<GenerateErrorKind> error = std::nullopt) : error_(error) {}
  GenerateResult generate(const GeneratorContext&, std::uint64_t) override {
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    if (error_) return GenerateResult::failure(*error_, "scripted failure");
    return GenerateResult::success(numbered(99));
  }
  std::string id() const override { return "hopeless"; }
  int calls() const { return calls_; }

 private:
  std::optional<GenerateErrorKind> error_;
  std::mutex mu_;
  int calls_ = 0;
};

SearchConfig config(int rounds, int samples = 4) {
  SearchConfig c;
  c.rounds = rounds;
  c.samples = samples;
  c.max_iter = rounds;
  c.max_retry = 5;
  c.jobs = 1;
  return c;
}

double max_candidate_score(const SearchResult& r) {
  double m = -std::numeric_limits<double>::infinity();
  for (const SimulationRecord& rec : r.records) {
    if (rec.origin != RecordOrigin::Initial) m = std::max(m, rec.score);
  }
  return m;
}

void expect_visit_bookkeeping(const SearchNode& n) {
  int child_visits = 0;
  double child_reward = 0.0;
  for (const SearchNode& c : n.children) {
    child_visits += c.visits;
    child_reward += c.total_reward;
    expect_visit_bookkeeping(c);
  }
  EXPECT_EQ(n.visits, 1 + child_visits);
  EXPECT_NEAR(n.total_reward, n.score + child_reward, 1e-9);
}

}  // namespace

// ----------------------------------------------------------------- random

TEST(RandomSearch, ReturnsTheLastRound) {
  ScriptedEnv env({1, 5, 3});
  CountingGenerator gen;
  const SearchResult r = random_search(env, gen, numbered(0), config(3));
  ASSERT_TRUE(r.score.has_value());
  EXPECT_EQ(*r.score, 3.0);
  EXPECT_EQ(number_of(r.machine), 3);
  EXPECT_EQ(*r.best_score, 5.0);
  ASSERT_EQ(r.records.size(), 4u);
  EXPECT_EQ(r.records[0].origin, RecordOrigin::Initial);
  EXPECT_EQ(node_expansions(r.stats), 1.0);
}

TEST(RandomSearch, ZeroRounds) {
  ScriptedEnv env({});
  CountingGenerator gen;
  const SearchResult r = random_search(env, gen, numbered(0), config(0));
  EXPECT_FALSE(r.score.has_value());
  EXPECT_EQ(r.machine, numbered(0));
  EXPECT_EQ(gen.calls(), 0);
}

TEST(RandomSearch, RetryBudget) {
  ScriptedEnv env({}, {99});
  HopelessGenerator gen;
  const SearchResult r = random_search(env, gen, numbered(0), config(4));
  EXPECT_EQ(gen.calls(), 4 * 5);
  EXPECT_EQ(r.stats.generator_calls, 4 * 5);
  // The last proposal is kept even though it is invalid.
  EXPECT_EQ(number_of(r.machine), 99);
  EXPECT_EQ(*r.score, 0.0);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_EQ(r.records[i].retries, 5);
    EXPECT_FALSE(r.records[i].machine_valid);
  }
}

TEST(RandomSearch, StopsRetryingOnFirstValidProposal) {
  ScriptedEnv env({1, 2, 3, 4, 5, 6}, {1, 2});
  CountingGenerator gen;
  const SearchResult r = random_search(env, gen, numbered(0), config(2));
  EXPECT_EQ(gen.calls(), 4);
  EXPECT_EQ(r.records[1].retries, 3);
  EXPECT_EQ(r.records[2].retries, 1);
  EXPECT_EQ(*r.score, 4.0);
}

TEST(RandomSearch, CarriesMachineForwardWithoutProposals) {
  ScriptedEnv env({});
  HopelessGenerator gen(GenerateErrorKind::NoMachineInResponse);
  const SearchResult r = random_search(env, gen, numbered(0), config(2));
  EXPECT_EQ(r.machine, numbered(0));
  EXPECT_EQ(r.records.back().origin, RecordOrigin::Fallback);
}

TEST(RandomSearch, TransportFailuresRaise) {
  ScriptedEnv env({});
  HopelessGenerator gen(GenerateErrorKind::Transport);
  EXPECT_THROW(random_search(env, gen, numbered(0), config(2)), RemoteFailure);
  EXPECT_EQ(gen.calls(), 5);
}

// ------------------------------------------------------------- best-of-n

TEST(BestOfN, ReturnsTheBestCandidate) {
  ScriptedEnv env({1, 5, 3});
  CountingGenerator gen;
  const SearchResult r = best_of_n(env, gen, numbered(0), config(1, 3));
  EXPECT_EQ(*r.score, 5.0);
  EXPECT_EQ(number_of(r.machine), 2);
}

TEST(BestOfN, BestOverAllLoggedCandidates) {
  const std::vector<double> scores = {0.5, 2.0, 1.0, 7.0, 3.0, 0.1, 6.5, 6.9, 4.0, 1.0, 0.0, 2.0};
  ScriptedEnv env(scores);
  CountingGenerator gen;
  const SearchResult r = best_of_n(env, gen, numbered(0), config(3, 4));
  ASSERT_EQ(r.records.size(), 13u);
  EXPECT_EQ(*r.score, max_candidate_score(r));
  EXPECT_EQ(*r.score, 7.0);
  EXPECT_EQ(node_expansions(r.stats), 4.0);
}

TEST(BestOfN, InitialMachineIsNotACandidate) {
  ScriptedEnv env({-1, -2});
  CountingGenerator gen;
  const SearchResult r = best_of_n(env, gen, numbered(0), config(1, 2));
  EXPECT_EQ(*r.score, -1.0);
  EXPECT_EQ(*r.best_score, 0.0);  // the initial machine, as logged
}

TEST(BestOfN, RetryBudgetAndFallback) {
  ScriptedEnv env({}, {99});
  HopelessGenerator gen;
  const SearchResult r = best_of_n(env, gen, numbered(0), config(3, 2));
  EXPECT_EQ(gen.calls(), 3 * 2 * 5);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_EQ(r.records[i].origin, RecordOrigin::Fallback);
    EXPECT_EQ(r.records[i].hash, machine_hash(numbered(0)));
  }
  EXPECT_EQ(r.machine, numbered(0));
}

TEST(BestOfN, WinnerSeedsTheNextRound) {
  class ContextProbe : public Generator {
   public:
    GenerateResult generate(const GeneratorContext& ctx, std::uint64_t) override {
      seen.push_back(number_of(ctx.machine));
      return GenerateResult::success(numbered(++n));
    }
    std::string id() const override { return "probe"; }
    std::vector<int> seen;
    int n = 0;
  };
  ScriptedEnv env({1, 9, 2, 0, 0, 0});
  ContextProbe gen;
  best_of_n(env, gen, numbered(0), config(2, 3));
  EXPECT_EQ(gen.seen, (std::vector<int>{0, 0, 0, 2, 2, 2}));
}

// ------------------------------------------------------------------ MCTS

TEST(Mcts, SingleIterationExpandsOnceAndPicksTheTopChild) {
  ScriptedEnv env({2, 9, 4, 1});
  CountingGenerator gen;
  SearchConfig c = config(1);
  c.max_iter = 1;
  const SearchResult r = mcts(env, gen, numbered(0), c);
  ASSERT_TRUE(r.tree.has_value());
  EXPECT_LE(r.tree->children.size(), 4u);
  EXPECT_EQ(r.tree->children.size(), 4u);
  EXPECT_EQ(*r.score, 9.0);
  EXPECT_EQ(number_of(r.machine), 2);
  EXPECT_EQ(r.tree->visits, 5);
  EXPECT_EQ(best_child(*r.tree), 1);
  EXPECT_EQ(gen.calls(), 4);
}

TEST(Mcts, VisitBookkeepingHoldsAfterSearch) {
  std::vector<double> scores;
  for (int i = 0; i < 40; ++i) scores.push_back(std::fmod(i * 7.3, 5.0));
  ScriptedEnv env(scores);
  CountingGenerator gen;
  SearchConfig c = config(5);
  c.children = 3;
  const SearchResult r = mcts(env, gen, numbered(0), c);
  ASSERT_TRUE(r.tree.has_value());
  expect_visit_bookkeeping(*r.tree);
  EXPECT_EQ(r.tree->visits, 1 + 5 * 3);
  EXPECT_EQ(r.stats.simulations, 1 + 5 * 3);
  EXPECT_EQ(node_expansions(r.stats), 3.0);
}

TEST(Mcts, GeneratorBudget) {
  ScriptedEnv env({}, {99});
  HopelessGenerator gen;
  SearchConfig c = config(3);
  c.children = 2;
  mcts(env, gen, numbered(0), c);
  EXPECT_EQ(gen.calls(), 3 * 2 * 5);
}

TEST(Mcts, HandComputedTwoLevelTree) {
  SearchNode root;
  root.visits = 1;
  root.total_reward = 1.0;
  root.children.resize(2);
  root.children[0].children.resize(2);

  backpropagate(root, {0}, 4.0);
  backpropagate(root, {1}, 2.0);
  backpropagate(root, {0, 0}, 6.0);
  backpropagate(root, {0, 1}, 0.0);

  EXPECT_EQ(root.visits, 5);
  EXPECT_DOUBLE_EQ(root.total_reward, 13.0);
  EXPECT_EQ(root.children[0].visits, 3);
  EXPECT_DOUBLE_EQ(root.children[0].total_reward, 10.0);
  EXPECT_EQ(root.children[1].visits, 1);
  EXPECT_EQ(root.children[0].children[0].visits, 1);
  EXPECT_EQ(root.children[0].children[1].visits, 1);
  EXPECT_DOUBLE_EQ(root.children[0].mean(), 10.0 / 3.0);

  // ln 5 = 1.609...; child 0: 3.333 + c*sqrt(1.609/3), child 1: 2 + c*sqrt(1.609)
  const double l = std::log(5.0);
  EXPECT_NEAR(ucb(root.children[0], 5, 1.0), 10.0 / 3.0 + std::sqrt(l / 3.0), 1e-12);
  EXPECT_NEAR(ucb(root.children[1], 5, 1.0), 2.0 + std::sqrt(l), 1e-12);
  EXPECT_EQ(select_child(root, 1.0), 0);
  EXPECT_EQ(select_child(root, 0.0), 0);
  EXPECT_EQ(select_child(root, 10.0), 1);
}

TEST(Mcts, UcbEdgeCases) {
  SearchNode n;
  EXPECT_TRUE(std::isinf(ucb(n, 3, 1.0)));
  n.visits = 2;
  n.total_reward = 3.0;
  EXPECT_DOUBLE_EQ(ucb(n, 1, 5.0), 1.5);  // no exploration bonus under a single-visit parent
  EXPECT_DOUBLE_EQ(ucb(n, 10, 0.0), 1.5);

  SearchNode parent;
  parent.visits = 3;
  parent.children.resize(3);
  parent.children[0].visits = 1;
  parent.children[2].visits = 1;
  EXPECT_EQ(select_child(parent, 1.0), 1);  // unvisited first
  SearchNode empty;
  EXPECT_EQ(select_child(empty, 1.0), -1);
  EXPECT_EQ(best_child(empty), -1);
}

TEST(Mcts, BestChildPrefersEarliestOnTies) {
  SearchNode parent;
  parent.children.resize(3);
  parent.children[0].score = 1.0;
  parent.children[1].score = 4.0;
  parent.children[2].score = 4.0;
  EXPECT_EQ(best_child(parent), 1);
}

// ----------------------------------------------------------- real machines

TEST(Search, ResultsDoNotDependOnJobs) {
  const SimulationEnvironment env(Scenario::car());
  const ConstructionTree start = load_tree(data_path("machines/car.json"));
  auto run = [&](int jobs, const std::string& strategy) {
    MutationGenerator gen(MutationPolicy{});
    SearchConfig c = config(2, 3);
    c.children = 3;
    c.jobs = jobs;
    c.seed = 42;
    const SearchResult r = strategy == "best-of-n" ? best_of_n(env, gen, start, c) : mcts(env, gen, start, c);
    Json out = Json::array();
    for (const SimulationRecord& rec : r.records) out.push_back(record_to_json(rec));
    return out.dump();
  };
  for (const std::string s : {"best-of-n", "mcts"}) EXPECT_EQ(run(1, s), run(3, s)) << s;
}

// ------------------------------------------------------------------- logs

TEST(Logs, NodeExpansions) {
  SearchStats s;
  EXPECT_FALSE(node_expansions(s).has_value());
  s.expansions_per_round = {8, 9};
  EXPECT_DOUBLE_EQ(*node_expansions(s), 8.5);
}

TEST(Logs, RecordRoundTrip) {
  SimulationRecord r;
  r.round = 3;
  r.path = {1, 0, 2};
  r.hash = 0xfedcba9876543210ULL;
  r.score = 12.5;
  r.file_valid = true;
  r.spatial_valid = true;
  r.machine_valid = false;
  r.retries = 4;
  r.origin = RecordOrigin::Fallback;
  const Json j = record_to_json(r);
  EXPECT_EQ(j["machine_hash"], "fedcba9876543210");
  const SimulationRecord back = record_from_json(j);
  EXPECT_EQ(record_to_json(back), j);
}

TEST(Logs, MachineHashIsFnv1aOverTheCanonicalText) {
  const ConstructionTree t = load_tree(data_path("machines/car.json"));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : format_tree(t)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  EXPECT_EQ(machine_hash(t), h);
  EXPECT_NE(machine_hash(t), machine_hash(numbered(0)));
  EXPECT_EQ(hash_hex(0x1fULL), "000000000000001f");
}

TEST(Logs, JsonlWriteAndRead) {
  const auto path = std::filesystem::temp_directory_path() / "mechforge_log_test.jsonl";
  std::filesystem::remove(path);
  ScriptedEnv env({1, 5, 3});
  CountingGenerator gen;
  SearchResult r;
  {
    JsonlLog log(path.string());
    r = random_search(env, gen, numbered(0), config(3), [&](const SimulationRecord& rec) { log.write(record_to_json(rec)); });
  }
  const std::vector<SimulationRecord> back = read_log(path.string());
  ASSERT_EQ(back.size(), r.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(record_to_json(back[i]), record_to_json(r.records[i]));
  std::filesystem::remove(path);
  EXPECT_THROW(read_log(path.string()), std::runtime_error);
}

TEST(Logs, ManifestCarriesConfig) {
  RunManifest m;
  m.tool_version = "0.1.0";
  m.seed = 9;
  m.strategy = "mcts";
  m.search_config = search_config_to_json(config(5));
  const Json j = manifest_to_json(m);
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["search_config"]["rounds"], 5);
  EXPECT_EQ(utc_timestamp().size(), 20u);  // 2026-01-01T00:00:00Z
}
