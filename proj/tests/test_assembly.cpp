// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "mechforge/gateway.hpp"
#include "mechforge/tasks.hpp"
#include "support.hpp"

using namespace mechforge;
using namespace mechforge::testing;

namespace {

bool has_violation(const StructureReport& r, StructureErrorKind k) {
  for (const auto& v : r.violations) {
    if (v.kind == k) return true;
  }
  return false;
}

bool has_diagnostic(const ParseResult& r, ParseErrorKind k) {
  for (const auto& d : r.diagnostics) {
    if (d.kind == k) return true;
  }
  return false;
}

ConstructionTree root_only() { return ConstructionTree{{block(0, 0, -1, -1)}}; }

}  // namespace

// ------------------------------------------------------------------ parsing

TEST(Parse, AcceptsIntegersIntegralFloatsAndNumericStrings) {
  const ParseResult r = parse_tree(R"([{"type":0,"id":0,"parent":-1,"face_id":-1},
                                      {"type":"1","id":1.0,"parent":"0","face_id":0}])");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.tree->nodes[1].type, 1);
  EXPECT_EQ(r.tree->nodes[1].attach, (Attachment{0, 0}));
}

TEST(Parse, ReportsEveryProblem) {
  const ParseResult r = parse_tree(R"([{"type":0,"id":0,"parent":-1,"face_id":-1},
                                      {"type":1,"id":5,"parent":0,"face_id":0},
                                      {"type":1,"id":2,"face_id":0},
                                      {"type":99,"id":3,"parent":0,"face_id":1}])");
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_diagnostic(r, ParseErrorKind::IdMismatch));
  EXPECT_TRUE(has_diagnostic(r, ParseErrorKind::MissingField));
  EXPECT_TRUE(has_diagnostic(r, ParseErrorKind::UnknownType));
}

TEST(Parse, RejectsNonArrayAndGarbage) {
  EXPECT_FALSE(parse_tree("{}").ok());
  EXPECT_FALSE(parse_tree("[{\"type\":0,").ok());
  EXPECT_FALSE(parse_tree("[{\"type\":0,\"id\":0,\"parent\":-1,\"face_id\":-1.5}]").ok());
}

TEST(Parse, FencedDocuments) {
  const std::string text = "Sure.\n```json\n[{\"type\":0,\"id\":0,\"parent\":-1,\"face_id\":-1}]\n```\nDone.";
  EXPECT_TRUE(has_fence(text));
  EXPECT_TRUE(parse_tree(extract_fenced(text)).ok());
  EXPECT_FALSE(has_fence("no fence here"));
  EXPECT_EQ(extract_fenced("plain"), "plain");
}

TEST(Parse, FormatRoundTrips) {
  const ConstructionTree t = load_tree(data_path("machines/catapult.json"));
  EXPECT_EQ(tree_from(format_tree(t)), t);
  const ParseResult r = parse_tree_json(tree_to_json(t));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r.tree, t);
}

// ---------------------------------------------------------------- structure

TEST(Structure, BundledMachinesAreClean) {
  for (const char* f : {"machines/car.json", "machines/catapult.json", "machines/spring_pair.json"}) {
    EXPECT_TRUE(validate_structure(load_tree(data_path(f))).ok()) << f;
  }
}

TEST(Structure, DetectsEachViolation) {
  ConstructionTree t;
  EXPECT_TRUE(has_violation(validate_structure(t), StructureErrorKind::MissingRoot));

  t = root_only();
  t.nodes.push_back(block(0, 1, 0, 0));
  EXPECT_TRUE(has_violation(validate_structure(t), StructureErrorKind::DuplicateRoot));

  t = root_only();
  t.nodes.push_back(block(1, 1, 2, 0));
  t.nodes.push_back(block(1, 2, 0, 0));
  EXPECT_TRUE(has_violation(validate_structure(t), StructureErrorKind::ParentOrder));

  t = root_only();
  t.nodes.push_back(block(1, 1, 0, 6));
  EXPECT_TRUE(has_violation(validate_structure(t), StructureErrorKind::UnknownFace));

  t = root_only();
  t.nodes.push_back(block(1, 1, 0, 0));
  t.nodes.push_back(block(15, 2, 0, 0));
  EXPECT_TRUE(has_violation(validate_structure(t), StructureErrorKind::FaceOccupied));

  t = root_only();
  t.nodes.push_back(block(7, 1, 0, 0));
  EXPECT_TRUE(has_violation(validate_structure(t), StructureErrorKind::LinearFormMismatch));

  t = root_only();
  t.nodes.push_back(linear(1, 1, 0, 0, 0, 1));
  EXPECT_TRUE(has_violation(validate_structure(t), StructureErrorKind::LinearFormMismatch));
}

TEST(Structure, LinearBlocksDoNotConsumeFaces) {
  ConstructionTree t = root_only();
  t.nodes.push_back(block(1, 1, 0, 0));
  t.nodes.push_back(linear(9, 2, 0, 4, 1, 6));
  t.nodes.push_back(block(15, 3, 0, 4));
  EXPECT_TRUE(validate_structure(t).ok());
}

// --------------------------------------------------------------- resolution

TEST(Resolve, PairedExamplePoses) {
  const ConstructionTree t = load_tree(data_path("machines/spring_pair.json"));
  const Json expected = Json::parse(slurp(data_path("machines/spring_pair.global.json")));
  const Json got = to_global(t);
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    SCOPED_TRACE("record " + std::to_string(i));
    EXPECT_EQ(got[i]["type"], expected[i]["type"]);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(got[i]["Position"][k].get<double>(), expected[i]["Position"][k].get<double>());
    }
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(got[i]["Rotation"][k].get<double>(), expected[i]["Rotation"][k].get<double>(), 1e-3);
    }
    if (expected[i].contains("end-position")) {
      for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(got[i]["end-position"][k].get<double>(), expected[i]["end-position"][k].get<double>(), 1e-9);
      }
    }
  }
  const ConstructionTree back = from_global(expected);
  EXPECT_EQ(back, t);
}

TEST(Resolve, RootIsCenteredAndChildrenStartAtTheirFace) {
  ConstructionTree t = root_only();
  t.nodes.push_back(block(63, 1, 0, 2));  // log on the root's left face
  const ResolvedMachine m = resolve(t);
  EXPECT_NEAR((m.blocks[0].center() - Vec3::Zero()).norm(), 0.0, 1e-12);
  EXPECT_NEAR((m.blocks[1].position - Vec3(-0.5, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((m.blocks[1].center() - Vec3(-2.0, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_EQ(m.blocks[1].orientation, Direction::XNeg);
}

TEST(Resolve, DetectsAutoConnections) {
  // A small block on the front beam lands with a side face on a side face of
  // the right-hand beam.
  ConstructionTree t = root_only();
  t.nodes.push_back(block(1, 1, 0, 3));
  t.nodes.push_back(block(1, 2, 0, 0));
  t.nodes.push_back(block(15, 3, 2, 3));
  const ResolvedMachine m = resolve(t);
  EXPECT_TRUE(check_collisions(m).valid());
  bool found = false;
  for (const auto& [a, b] : m.auto_connections) found = found || (a == 1 && b == 3);
  EXPECT_TRUE(found);
}

TEST(Resolve, ToGlobalFromGlobalIsPoseStable) {
  const ConstructionTree seed = load_tree(data_path("machines/car.json"));
  MutationPolicy policy;
  policy.max_edits = 4;
  int checked = 0;
  for (std::uint64_t s = 0; s < 60; ++s) {
    std::mt19937_64 rng(s);
    const MutationResult mr = mutate(seed, policy, rng);
    if (!mr.tree || !validate_structure(*mr.tree).ok()) continue;
    const Json g = to_global(*mr.tree);
    ConstructionTree back;
    try {
      back = from_global(g);
    } catch (const UnrecoverableError&) {
      continue;  // two blocks stacked on one face; the pose document cannot tell them apart
    }
    EXPECT_EQ(to_global(back), g) << format_tree(*mr.tree);
    ++checked;
  }
  EXPECT_GT(checked, 40);
}

TEST(Resolve, FromGlobalRejectsFloatingBlocks) {
  Json doc = Json::parse(slurp(data_path("machines/spring_pair.global.json")));
  doc[2]["Position"] = Json::array({5, 5, 5});
  EXPECT_THROW(from_global(doc), UnrecoverableError);
}

// ------------------------------------------------------------ spatial checks

TEST(Spatial, CollisionPairsAreReported) {
  const ConstructionTree t = load_tree(test_data_path("validity_corpus/collide_large_wheels.json"));
  const CollisionReport r = check_collisions(resolve(t));
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].a, 1);
  EXPECT_EQ(r.pairs[0].b, 2);
}

TEST(Spatial, TouchingBlocksDoNotCollide) {
  const ConstructionTree t = load_tree(data_path("machines/catapult.json"));
  EXPECT_TRUE(check_collisions(resolve(t)).valid());
}

TEST(Spatial, BoundingDimsAgainstLimits) {
  auto logs_along_z = [](int n) {
    ConstructionTree t = root_only();
    for (int i = 1; i <= n; ++i) t.nodes.push_back(block(63, i, i - 1, 0));
    return t;
  };
  // Root spans z [-0.5, 0.5], each log adds 3.
  const BoundingDims five = bounding_dims(resolve(logs_along_z(5)));
  EXPECT_DOUBLE_EQ(five.length_z, 16.0);
  EXPECT_FALSE(five.exceeds_limits);
  const BoundingDims six = bounding_dims(resolve(logs_along_z(6)));
  EXPECT_DOUBLE_EQ(six.length_z, 19.0);
  EXPECT_TRUE(six.exceeds_limits);
}

TEST(Validity, CorpusMatchesLabels) {
  const std::string dir = test_data_path("validity_corpus");
  const Json labels = Json::parse(slurp(dir + "/labels.json"));
  ASSERT_EQ(labels.size(), 20u);
  std::vector<RunRecord> runs;
  std::vector<RunRecord> expected;
  for (const auto& [name, lab] : labels.items()) {
    SCOPED_TRACE(name);
    const ValidityReport v = machine_validity(slurp(dir + "/" + name));
    EXPECT_EQ(v.file_valid, lab["file_valid"].get<bool>());
    EXPECT_EQ(v.spatial_valid, lab["spatial_valid"].get<bool>());
    EXPECT_EQ(v.overall, lab["machine_valid"].get<bool>());
    runs.push_back({v.file_valid, v.spatial_valid, v.overall, 0.0});
    expected.push_back({lab["file_valid"].get<bool>(), lab["spatial_valid"].get<bool>(),
                        lab["machine_valid"].get<bool>(), 0.0});
  }
  const BatchMetrics got = batch_metrics(runs);
  const BatchMetrics want = batch_metrics(expected);
  EXPECT_EQ(got.file_rate, want.file_rate);
  EXPECT_EQ(got.spatial_rate, want.spatial_rate);
  EXPECT_EQ(got.machine_rate, want.machine_rate);
  EXPECT_EQ(want.file_valid, 16);
  EXPECT_EQ(want.machine_valid, 8);
}
