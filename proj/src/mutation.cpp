// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <algorithm>
#include <set>

#include "mechforge/gateway.hpp"

namespace mechforge {
namespace {

enum class Op { Add, Remove, Move };

struct FaceRef {
  int block;
  int face;
};

bool is_linear_node(const ConstructionNode& n) { return block_spec(n.type).is_linear(); }

// Faces taken by regular attachers. Linear endpoints do not consume faces.
std::set<std::pair<int, int>> occupied_faces(const ConstructionTree& t) {
  std::set<std::pair<int, int>> out;
  for (const ConstructionNode& n : t.nodes) {
    if (n.attach.parent >= 0 && !is_linear_node(n)) out.insert({n.attach.parent, n.attach.face});
  }
  return out;
}

std::vector<FaceRef> free_faces(const ConstructionTree& t, int below_id) {
  const auto taken = occupied_faces(t);
  std::vector<FaceRef> out;
  for (const ConstructionNode& n : t.nodes) {
    if (n.id >= below_id || is_linear_node(n)) continue;
    const int faces = static_cast<int>(block_spec(n.type).faces.size());
    for (int f = 0; f < faces; ++f) {
      if (!taken.count({n.id, f})) out.push_back({n.id, f});
    }
  }
  return out;
}

std::vector<FaceRef> all_faces(const ConstructionTree& t) {
  std::vector<FaceRef> out;
  for (const ConstructionNode& n : t.nodes) {
    if (is_linear_node(n)) continue;
    const int faces = static_cast<int>(block_spec(n.type).faces.size());
    for (int f = 0; f < faces; ++f) out.push_back({n.id, f});
  }
  return out;
}

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::optional<EditCommand> sample_command(const ConstructionTree& t, Op op, const std::vector<int>& types,
                                          std::discrete_distribution<std::size_t>& type_dist, std::mt19937_64& rng) {
  switch (op) {
    case Op::Add: {
      const int type = types[type_dist(rng)];
      if (block_spec(type).is_linear()) {
        const std::vector<FaceRef> faces = all_faces(t);
        if (faces.empty()) return std::nullopt;
        const FaceRef a = pick(faces, rng);
        const FaceRef b = pick(faces, rng);
        return AddLinearCmd{type, a.block, a.face, b.block, b.face};
      }
      const std::vector<FaceRef> faces = free_faces(t, static_cast<int>(t.size()));
      if (faces.empty()) return std::nullopt;
      const FaceRef f = pick(faces, rng);
      return AddCmd{type, f.block, f.face};
    }
    case Op::Remove: {
      std::vector<bool> has_child(t.size(), false);
      for (const ConstructionNode& n : t.nodes) {
        if (n.attach.parent >= 0) has_child[static_cast<std::size_t>(n.attach.parent)] = true;
        if (n.attach_b && n.attach_b->parent >= 0) has_child[static_cast<std::size_t>(n.attach_b->parent)] = true;
      }
      std::vector<int> leaves;
      for (const ConstructionNode& n : t.nodes) {
        if (n.id != 0 && !has_child[static_cast<std::size_t>(n.id)]) leaves.push_back(n.id);
      }
      if (leaves.empty()) return std::nullopt;
      return RemoveCmd{pick(leaves, rng)};
    }
    case Op::Move: {
      std::vector<int> movable;
      for (const ConstructionNode& n : t.nodes) {
        if (n.id != 0 && !is_linear_node(n)) movable.push_back(n.id);
      }
      if (movable.empty()) return std::nullopt;
      const int id = pick(movable, rng);
      const std::vector<FaceRef> faces = free_faces(t, id);
      if (faces.empty()) return std::nullopt;
      const FaceRef f = pick(faces, rng);
      return MoveCmd{id, f.block, f.face};
    }
  }
  return std::nullopt;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void MutationPolicy::check() const {
  if (add_weight < 0 || remove_weight < 0 || move_weight < 0) {
    throw std::invalid_argument("mutation weights must be nonnegative");
  }
  if (add_weight + remove_weight + move_weight <= 0) throw std::invalid_argument("mutation weights are all zero");
  if (max_edits < 1) throw std::invalid_argument("max_edits must be at least 1");
  if (budget < 1) throw std::invalid_argument("budget must be at least 1");
  double total = 0.0;
  for (const auto& [type, w] : type_weights) {
    if (w < 0) throw std::invalid_argument("block type weights must be nonnegative");
    if (type == kRootType || find_block(type) == nullptr) {
      throw std::invalid_argument("block type " + std::to_string(type) + " cannot be added");
    }
    total += w;
  }
  if (!type_weights.empty() && total <= 0) throw std::invalid_argument("block type weights are all zero");
}

Json policy_to_json(const MutationPolicy& p) {
  Json j;
  j["add_weight"] = p.add_weight;
  j["remove_weight"] = p.remove_weight;
  j["move_weight"] = p.move_weight;
  Json types = Json::object();
  for (const auto& [t, w] : p.type_weights) types[std::to_string(t)] = w;
  j["type_weights"] = std::move(types);
  j["max_edits"] = p.max_edits;
  j["seed"] = p.seed;
  j["budget"] = p.budget;
  return j;
}

MutationResult mutate(const ConstructionTree& machine, const MutationPolicy& policy, std::mt19937_64& rng) {
  policy.check();
  std::vector<int> types;
  std::vector<double> weights;
  if (policy.type_weights.empty()) {
    for (const BlockSpec& s : load_catalog()) {
      if (s.type_id == kRootType) continue;
      types.push_back(s.type_id);
      weights.push_back(1.0);
    }
  } else {
    for (const auto& [t, w] : policy.type_weights) {
      types.push_back(t);
      weights.push_back(w);
    }
  }
  std::discrete_distribution<std::size_t> type_dist(weights.begin(), weights.end());
  std::discrete_distribution<int> op_dist({policy.add_weight, policy.remove_weight, policy.move_weight});
  const int target = std::uniform_int_distribution<int>(1, policy.max_edits)(rng);

  MutationResult out;
  ConstructionTree work = machine;
  while (static_cast<int>(out.commands.size()) < target && out.rejected < policy.budget) {
    const Op op = static_cast<Op>(op_dist(rng));
    const std::optional<EditCommand> cmd = sample_command(work, op, types, type_dist, rng);
    if (!cmd) {
      ++out.rejected;
      continue;
    }
    try {
      ConstructionTree next = apply_edits(work, {*cmd});
      if (!validate_structure(next).ok()) {
        ++out.rejected;
        continue;
      }
      work = std::move(next);
      out.commands.push_back(*cmd);
    } catch (const EditError&) {
      ++out.rejected;
    }
  }
  if (!out.commands.empty()) out.tree = std::move(work);
  return out;
}

MutationGenerator::MutationGenerator(MutationPolicy policy) : policy_(std::move(policy)) { policy_.check(); }

GenerateResult MutationGenerator::generate(const GeneratorContext& ctx, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix(policy_.seed) ^ seed);
  MutationResult m = mutate(ctx.machine, policy_, rng);
  if (!m.tree) {
    return GenerateResult::failure(GenerateErrorKind::BudgetExhausted,
                                   std::to_string(m.rejected) + " proposals rejected");
  }
  std::string note;
  for (const EditCommand& c : m.commands) note += (note.empty() ? "" : "; ") + print_command(c);
  return GenerateResult::success(std::move(*m.tree), std::move(note));
}

}  // namespace mechforge
