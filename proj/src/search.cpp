// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace mechforge {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix(a ^ splitmix(b)); }

// Runs f(0..n-1) on up to `jobs` threads. The first exception, by index, is rethrown.
template <class F>
void parallel_for(int n, int jobs, F&& f) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Proposal {
  std::optional<ConstructionTree> tree;  // last tree produced, valid or not
  bool valid = false;
  int calls = 0;
  int transport_failures = 0;
  std::string last_error;
  std::string note;
};

Proposal propose(const Environment& env, Generator& gen, const GeneratorContext& ctx, int max_retry,
                 std::uint64_t seed) {
  Proposal p;
  for (int attempt = 0; attempt < std::max(1, max_retry); ++attempt) {
    GenerateResult r = gen.generate(ctx, mix(seed, static_cast<std::uint64_t>(attempt)));
    ++p.calls;
    if (r.error) {
      if (*r.error == GenerateErrorKind::Transport) ++p.transport_failures;
      p.last_error = std::string(to_string(*r.error)) + ": " + r.message;
    }
    if (r.tree) {
      p.tree = std::move(r.tree);
      p.note = std::move(r.note);
      if (env.valid(*p.tree)) {
        p.valid = true;
        break;
      }
    }
  }
  if (p.transport_failures == p.calls) {
    throw RemoteFailure("generator failed " + std::to_string(p.calls) + " times: " + p.last_error);
  }
  return p;
}

struct Candidate {
  ConstructionTree machine;
  Score score;
  int calls = 0;
  RecordOrigin origin = RecordOrigin::Candidate;
  std::string note;
};

SimulationRecord make_record(int round, std::vector<int> path, const ConstructionTree& machine, const Score& s,
                             int retries, RecordOrigin origin) {
  SimulationRecord r;
  r.round = round;
  r.path = std::move(path);
  r.hash = machine_hash(machine);
  r.score = s.score;
  r.file_valid = s.file_valid;
  r.spatial_valid = s.spatial_valid;
  r.machine_valid = s.machine_valid;
  r.retries = retries;
  r.origin = origin;
  return r;
}

class Recorder {
 public:
  Recorder(SearchResult& result, const RecordSink& sink) : result_(result), sink_(sink) {}

  void add(SimulationRecord rec, const ConstructionTree& machine) {
    ++result_.stats.simulations;
    if (!result_.best_score || rec.score > *result_.best_score) {
      result_.best_score = rec.score;
      result_.best_machine = machine;
    }
    if (sink_) sink_(rec);
    result_.records.push_back(std::move(rec));
  }

 private:
  SearchResult& result_;
  const RecordSink& sink_;
};

GeneratorContext make_context(const Environment& env, const ConstructionTree& machine, const Score& score,
                              const std::vector<HistoryEntry>& history) {
  GeneratorContext ctx;
  ctx.machine = machine;
  ctx.feedback = score.feedback;
  ctx.score = score.score;
  ctx.history = history;
  ctx.task_text = env.task_description();
  return ctx;
}

// Generates and scores `count` candidates from one context. A slot whose
// retries never produce a valid machine falls back to `fallback` when given,
// otherwise keeps its last (invalid) proposal.
std::vector<Candidate> expand(const Environment& env, Generator& gen, const GeneratorContext& ctx, int count,
                              const SearchConfig& config, std::uint64_t seed, const ConstructionTree* fallback) {
  std::vector<Candidate> out(static_cast<std::size_t>(count));
  parallel_for(count, config.jobs, [&](int i) {
    Proposal p = propose(env, gen, ctx, config.max_retry, mix(seed, static_cast<std::uint64_t>(i)));
    Candidate& c = out[static_cast<std::size_t>(i)];
    c.calls = p.calls;
    c.note = std::move(p.note);
    if (p.valid || (p.tree && fallback == nullptr)) {
      c.machine = std::move(*p.tree);
    } else {
      c.machine = fallback != nullptr ? *fallback : ctx.machine;
      c.origin = RecordOrigin::Fallback;
    }
    c.score = env.evaluate(c.machine);
  });
  return out;
}

}  // namespace

// ------------------------------------------------------------ environment

bool SimulationEnvironment::valid(const ConstructionTree& tree) const { return machine_validity(tree).overall; }

Score SimulationEnvironment::evaluate(const ConstructionTree& tree) const {
  Evaluation e = mechforge::evaluate(tree, scenario_);
  Score s;
  s.file_valid = e.validity.file_valid;
  s.spatial_valid = e.validity.spatial_valid;
  s.machine_valid = e.validity.overall;
  s.reward_valid = e.reward.is_valid;
  s.score = e.reward.R;
  s.feedback = std::move(e.feedback);
  return s;
}

std::string SimulationEnvironment::task_description() const {
  std::ostringstream o;
  const double secs = scenario_.duration;
  if (scenario_.task == TaskKind::Car) {
    o << "Task: car. Build a machine that travels as far as possible in the " << to_string(scenario_.target)
      << " direction within " << secs << " seconds. Powered parts switch on at " << scenario_.power_on_time
      << " s. Score: the largest distance the root block reaches along the target direction.";
  } else {
    o << "Task: catapult. Build a machine with exactly one boulder (type " << kBoulderType
      << ") and throw it as high and as far as possible in the " << to_string(scenario_.target)
      << " direction within " << secs << " seconds. Powered parts switch on at " << scenario_.power_on_time
      << " s. The boulder must rise above " << kMinBoulderHeight << " m to count.";
    if (scenario_.walls) o << " Walls " << scenario_.walls->height << " m high surround the launch area.";
  }
  return o.str();
}

// ------------------------------------------------------------- generators

std::string_view to_string(GenerateErrorKind k) {
  switch (k) {
    case GenerateErrorKind::Transport: return "Transport";
    case GenerateErrorKind::NoMachineInResponse: return "NoMachineInResponse";
    case GenerateErrorKind::ParseFailed: return "ParseFailed";
    case GenerateErrorKind::BudgetExhausted: return "BudgetExhausted";
  }
  return "?";
}

GenerateResult GenerateResult::success(ConstructionTree t, std::string note) {
  GenerateResult r;
  r.tree = std::move(t);
  r.note = std::move(note);
  return r;
}

GenerateResult GenerateResult::failure(GenerateErrorKind kind, std::string message) {
  GenerateResult r;
  r.error = kind;
  r.message = std::move(message);
  return r;
}

std::string_view to_string(RecordOrigin o) {
  switch (o) {
    case RecordOrigin::Initial: return "initial";
    case RecordOrigin::Candidate: return "candidate";
    case RecordOrigin::Fallback: return "fallback";
  }
  return "?";
}

std::optional<double> node_expansions(const SearchStats& stats) {
  if (stats.expansions_per_round.empty()) return std::nullopt;
  double sum = 0.0;
  for (int e : stats.expansions_per_round) sum += e;
  return sum / static_cast<double>(stats.expansions_per_round.size());
}

// ----------------------------------------------------------------- random

SearchResult random_search(const Environment& env, Generator& gen, const ConstructionTree& initial,
                           const SearchConfig& config, const RecordSink& sink) {
  SearchResult result;
  result.machine = initial;
  result.best_machine = initial;
  if (config.rounds <= 0) return result;
  Recorder rec(result, sink);

  ConstructionTree machine = initial;
  Score current = env.evaluate(initial);
  rec.add(make_record(0, {}, initial, current, 0, RecordOrigin::Initial), initial);
  std::vector<HistoryEntry> history;
  for (int round = 1; round <= config.rounds; ++round) {
    const GeneratorContext ctx = make_context(env, machine, current, history);
    Proposal p = propose(env, gen, ctx, config.max_retry, mix(config.seed, static_cast<std::uint64_t>(round)));
    result.stats.generator_calls += p.calls;
    RecordOrigin origin = RecordOrigin::Candidate;
    if (p.tree) {
      machine = std::move(*p.tree);
    } else {
      origin = RecordOrigin::Fallback;  // nothing usable: carry the previous machine forward
    }
    current = env.evaluate(machine);
    rec.add(make_record(round, {0}, machine, current, p.calls, origin), machine);
    result.stats.expansions_per_round.push_back(1);
    history.push_back({round, current.score, current.machine_valid, p.note});
  }
  result.machine = machine;
  result.score = current.score;
  return result;
}

// ------------------------------------------------------------- best-of-n

SearchResult best_of_n(const Environment& env, Generator& gen, const ConstructionTree& initial,
                       const SearchConfig& config, const RecordSink& sink) {
  SearchResult result;
  result.machine = initial;
  result.best_machine = initial;
  if (config.rounds <= 0 || config.samples <= 0) return result;
  Recorder rec(result, sink);

  ConstructionTree seed_machine = initial;
  Score seed_score = env.evaluate(initial);
  rec.add(make_record(0, {}, initial, seed_score, 0, RecordOrigin::Initial), initial);
  std::optional<double> best;
  std::vector<HistoryEntry> history;
  for (int round = 1; round <= config.rounds; ++round) {
    const GeneratorContext ctx = make_context(env, seed_machine, seed_score, history);
    std::vector<Candidate> cands = expand(env, gen, ctx, config.samples, config,
                                          mix(config.seed, static_cast<std::uint64_t>(round)), &seed_machine);
    int round_best = 0;
    for (int i = 0; i < static_cast<int>(cands.size()); ++i) {
      const Candidate& c = cands[static_cast<std::size_t>(i)];
      result.stats.generator_calls += c.calls;
      rec.add(make_record(round, {i}, c.machine, c.score, c.calls, c.origin), c.machine);
      if (c.score.score > cands[static_cast<std::size_t>(round_best)].score.score) round_best = i;
      if (!best || c.score.score > *best) {
        best = c.score.score;
        result.machine = c.machine;
      }
    }
    result.stats.expansions_per_round.push_back(config.samples);
    Candidate& winner = cands[static_cast<std::size_t>(round_best)];
    history.push_back({round, winner.score.score, winner.score.machine_valid, winner.note});
    seed_machine = std::move(winner.machine);
    seed_score = std::move(winner.score);
  }
  result.score = best;
  return result;
}

// ------------------------------------------------------------------ MCTS

double ucb(const SearchNode& child, int parent_visits, double c) {
  if (child.visits <= 0) return std::numeric_limits<double>::infinity();
  const double explore = parent_visits > 1 ? std::sqrt(std::log(static_cast<double>(parent_visits)) / child.visits) : 0.0;
  return child.mean() + c * explore;
}

int select_child(const SearchNode& parent, double c) {
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(parent.children.size()); ++i) {
    const double v = ucb(parent.children[static_cast<std::size_t>(i)], parent.visits, c);
    if (best < 0 || v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

int best_child(const SearchNode& parent) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(parent.children.size()); ++i) {
    if (best < 0 || parent.children[static_cast<std::size_t>(i)].score > parent.children[static_cast<std::size_t>(best)].score) {
      best = i;
    }
  }
  return best;
}

void backpropagate(SearchNode& root, const std::vector<int>& path, double reward) {
  SearchNode* node = &root;
  node->visits += 1;
  node->total_reward += reward;
  for (int i : path) {
    node = &node->children.at(static_cast<std::size_t>(i));
    node->visits += 1;
    node->total_reward += reward;
  }
}

SearchResult mcts(const Environment& env, Generator& gen, const ConstructionTree& initial, const SearchConfig& config,
                  const RecordSink& sink) {
  SearchResult result;
  Recorder rec(result, sink);
  SearchNode root;
  root.machine = initial;
  {
    Score s = env.evaluate(initial);
    root.score = s.score;
    root.visits = 1;
    root.total_reward = s.score;
    root.feedback = std::move(s.feedback);
    rec.add(make_record(0, {}, initial, Score{s.file_valid, s.spatial_valid, s.machine_valid, s.reward_valid, s.score, {}},
                        0, RecordOrigin::Initial),
            initial);
  }

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    std::vector<int> path;
    SearchNode* leaf = &root;
    std::vector<HistoryEntry> history;
    while (!leaf->children.empty()) {
      const int i = select_child(*leaf, config.exploration);
      path.push_back(i);
      leaf = &leaf->children[static_cast<std::size_t>(i)];
      history.push_back({static_cast<int>(path.size()), leaf->score, true, {}});
    }
    GeneratorContext ctx;
    ctx.machine = leaf->machine;
    ctx.feedback = leaf->feedback;
    ctx.score = leaf->score;
    ctx.history = std::move(history);
    ctx.task_text = env.task_description();

    std::vector<Candidate> cands =
        expand(env, gen, ctx, config.children, config, mix(config.seed, static_cast<std::uint64_t>(iter)), &leaf->machine);
    const std::size_t first = leaf->children.size();
    for (std::size_t k = 0; k < cands.size(); ++k) {
      Candidate& c = cands[k];
      SearchNode child;
      child.machine = c.machine;
      child.score = c.score.score;
      child.feedback = c.score.feedback;
      leaf->children.push_back(std::move(child));
      std::vector<int> child_path = path;
      child_path.push_back(static_cast<int>(first + k));
      result.stats.generator_calls += c.calls;
      rec.add(make_record(iter, child_path, c.machine, c.score, c.calls, c.origin), c.machine);
      backpropagate(root, child_path, c.score.score);
    }
    result.stats.expansions_per_round.push_back(static_cast<int>(cands.size()));
  }

  const int b = best_child(root);
  const SearchNode& chosen = b < 0 ? root : root.children[static_cast<std::size_t>(b)];
  result.machine = chosen.machine;
  result.score = chosen.score;
  result.tree = std::move(root);
  return result;
}

}  // namespace mechforge
