// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include <random>

#include "mechforge/commands.hpp"
#include "support.hpp"

using namespace mechforge;
using namespace mechforge::testing;

namespace {

ConstructionTree root_only() { return ConstructionTree{{block(0, 0, -1, -1)}}; }

EditErrorKind error_of(const ConstructionTree& t, const std::vector<EditCommand>& cmds) {
  try {
    apply_edits(t, cmds);
  } catch (const EditError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "edits applied without error";
  return EditErrorKind::UnknownBlock;
}

EditCommand random_command(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> small(-3, 120);
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: return AddCmd{small(rng), small(rng), small(rng)};
    case 1: return AddLinearCmd{small(rng), small(rng), small(rng), small(rng), small(rng)};
    case 2: return RemoveCmd{small(rng)};
    default: return MoveCmd{small(rng), small(rng), small(rng)};
  }
}

}  // namespace

TEST(Commands, ParsesEachForm) {
  const CommandParseResult r = parse_commands(
      "Add [15] to [0] in [4]\n"
      "  Add [9] to [1] in [8] to [3] in [7]  \n"
      "\n"
      "Remove [14]\r\n"
      "Move [13] to [2] in [9]\n");
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.commands.size(), 4u);
  EXPECT_EQ(std::get<AddCmd>(r.commands[0]), (AddCmd{15, 0, 4}));
  EXPECT_EQ(std::get<AddLinearCmd>(r.commands[1]), (AddLinearCmd{9, 1, 8, 3, 7}));
  EXPECT_EQ(std::get<RemoveCmd>(r.commands[2]), (RemoveCmd{14}));
  EXPECT_EQ(std::get<MoveCmd>(r.commands[3]), (MoveCmd{13, 2, 9}));
}

TEST(Commands, ReportsBadLinesWithLineNumbers) {
  const CommandParseResult r = parse_commands("Explode everything\nRemove [3]\nRemove 4\nAdd [1] to [0]");
  ASSERT_EQ(r.errors.size(), 3u);
  EXPECT_EQ(r.errors[0].line, 1);
  EXPECT_EQ(r.errors[0].text, "Explode everything");
  EXPECT_EQ(r.errors[1].line, 3);
  EXPECT_EQ(r.errors[2].line, 4);
  EXPECT_EQ(r.commands.size(), 1u);
  EXPECT_FALSE(parse_commands("Remove [99999999999999]").ok());
}

TEST(Commands, ExtractsModificationSteps) {
  const auto steps = extract_modification_steps("text <Modification Steps>\nRemove [2]\n</Modification Steps> tail");
  ASSERT_TRUE(steps.has_value());
  EXPECT_EQ(*steps, "\nRemove [2]\n");
  EXPECT_FALSE(extract_modification_steps("no steps").has_value());
}

TEST(Commands, PrintParsePrintIsByteIdentical) {
  std::mt19937_64 rng(20260101);
  for (int i = 0; i < 1000; ++i) {
    std::vector<EditCommand> cmds(std::uniform_int_distribution<std::size_t>(0, 12)(rng));
    for (auto& c : cmds) c = random_command(rng);
    const std::string printed = print_commands(cmds);
    const CommandParseResult r = parse_commands(printed);
    ASSERT_TRUE(r.ok()) << printed;
    EXPECT_EQ(r.commands, cmds);
    ASSERT_EQ(print_commands(r.commands), printed);
  }
}

TEST(Edits, RemovingTheCatapultSpringsAndBallast) {
  const ConstructionTree t = load_tree(data_path("machines/catapult.json"));
  ASSERT_EQ(t.size(), 17u);
  const CommandParseResult r = parse_commands("Remove [14]\nRemove [15]\nRemove [16]");
  ASSERT_TRUE(r.ok());
  const ConstructionTree out = apply_edits(t, r.commands);
  EXPECT_EQ(out.size(), 14u);
  EXPECT_TRUE(validate_structure(out).ok());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out.nodes[i], t.nodes[i]);
}

TEST(Edits, AddAppendsAndRemoveRenumbers) {
  ConstructionTree t = root_only();
  t = apply_edits(t, {AddCmd{1, 0, 0}, AddCmd{15, 1, 0}, AddCmd{15, 0, 4}});
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t.nodes[3].attach, (Attachment{0, 4}));
  t = apply_edits(t, {RemoveCmd{2}});
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.nodes[2].id, 2);
  EXPECT_EQ(t.nodes[2].attach, (Attachment{0, 4}));
  EXPECT_TRUE(validate_structure(t).ok());
}

TEST(Edits, MoveCarriesSubtree) {
  ConstructionTree t = root_only();
  t = apply_edits(t, {AddCmd{1, 0, 0}, AddCmd{15, 0, 4}, AddCmd{15, 2, 0}});
  t = apply_edits(t, {MoveCmd{2, 1, 5}});
  EXPECT_EQ(t.nodes[2].attach, (Attachment{1, 5}));
  EXPECT_EQ(t.nodes[3].attach, (Attachment{2, 0}));
  EXPECT_TRUE(validate_structure(t).ok());
}

TEST(Edits, EachRuleViolation) {
  ConstructionTree t = root_only();
  t = apply_edits(t, {AddCmd{1, 0, 0}, AddCmd{15, 1, 0}, AddLinearCmd{7, 0, 4, 1, 5}});
  EXPECT_EQ(error_of(t, {RemoveCmd{1}}), EditErrorKind::RemoveHasChildren);
  EXPECT_EQ(error_of(t, {RemoveCmd{0}}), EditErrorKind::RemoveRoot);
  EXPECT_EQ(error_of(t, {MoveCmd{1, 2, 0}}), EditErrorKind::MoveParentOrder);
  EXPECT_EQ(error_of(t, {MoveCmd{3, 0, 2}}), EditErrorKind::MoveLinearForbidden);
  EXPECT_EQ(error_of(t, {MoveCmd{0, 0, 2}}), EditErrorKind::MoveRoot);
  EXPECT_EQ(error_of(t, {AddCmd{15, 0, 0}}), EditErrorKind::FaceOccupied);
  EXPECT_EQ(error_of(t, {RemoveCmd{9}}), EditErrorKind::UnknownBlock);
  EXPECT_EQ(error_of(t, {AddCmd{15, 0, 6}}), EditErrorKind::UnknownFace);
  EXPECT_EQ(error_of(t, {AddCmd{123, 0, 2}}), EditErrorKind::UnknownType);
  EXPECT_EQ(error_of(t, {AddCmd{0, 0, 2}}), EditErrorKind::UnknownType);
  EXPECT_EQ(error_of(t, {AddCmd{9, 0, 2}}), EditErrorKind::LinearFormMismatch);
  EXPECT_EQ(error_of(t, {AddLinearCmd{15, 0, 2, 1, 3}}), EditErrorKind::LinearFormMismatch);
}

TEST(Edits, ErrorsNameTheFailingCommand) {
  const ConstructionTree t = root_only();
  try {
    apply_edits(t, {AddCmd{15, 0, 0}, AddCmd{15, 0, 1}, RemoveCmd{7}});
    FAIL();
  } catch (const EditError& e) {
    EXPECT_EQ(e.command(), 2);
  }
}

TEST(Edits, RemovedBlocksCannotBeReferencedLater) {
  ConstructionTree t = root_only();
  t = apply_edits(t, {AddCmd{15, 0, 0}});
  EXPECT_EQ(error_of(t, {RemoveCmd{1}, AddCmd{15, 1, 0}}), EditErrorKind::UnknownBlock);
}
