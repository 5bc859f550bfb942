// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Incremental edits on a construction tree: add, remove and move blocks.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mechforge/assembly.hpp"

namespace mechforge {

struct AddCmd {
  int type = 0;
  int parent = 0;
  int face = 0;
  bool operator==(const AddCmd&) const = default;
};

struct AddLinearCmd {
  int type = 0;
  int parent_a = 0;
  int face_a = 0;
  int parent_b = 0;
  int face_b = 0;
  bool operator==(const AddLinearCmd&) const = default;
};

struct RemoveCmd {
  int id = 0;
  bool operator==(const RemoveCmd&) const = default;
};

struct MoveCmd {
  int id = 0;
  int new_parent = 0;
  int new_face = 0;
  bool operator==(const MoveCmd&) const = default;
};

using EditCommand = std::variant<AddCmd, AddLinearCmd, RemoveCmd, MoveCmd>;

// "Add [t] to [id] in [face]", "Remove [id]", ...
std::string print_command(const EditCommand& cmd);

enum class EditErrorKind {
  RemoveHasChildren,
  RemoveRoot,
  MoveParentOrder,
  MoveLinearForbidden,
  MoveRoot,
  FaceOccupied,
  UnknownBlock,
  UnknownFace,
  UnknownType,
  LinearFormMismatch,
};
std::string_view to_string(EditErrorKind k);

class EditError : public std::runtime_error {
 public:
  EditError(EditErrorKind kind, int command, const std::string& what);
  EditErrorKind kind() const { return kind_; }
  int command() const { return command_; }  // index into the command list

 private:
  EditErrorKind kind_;
  int command_;
};

// Applies commands in order. Ids in commands refer to the input tree; each Add
// appends a block with the next free id. Removed blocks are dropped and ids are
// renumbered densely once all commands have run. Moving a block carries its
// subtree along. Throws EditError on the first rule violation.
ConstructionTree apply_edits(const ConstructionTree& tree, const std::vector<EditCommand>& commands);

}  // namespace mechforge
