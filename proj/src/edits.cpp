// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/edits.hpp"

#include <optional>

namespace mechforge {
namespace {

std::string br(int v) { return "[" + std::to_string(v) + "]"; }

struct Slot {
  ConstructionNode node;
  bool alive = true;
};

class Editor {
 public:
  explicit Editor(const ConstructionTree& tree) {
    for (const ConstructionNode& n : tree.nodes) slots_.push_back({n, true});
  }

  void apply(const EditCommand& cmd, int index) {
    index_ = index;
    std::visit([this](const auto& c) { run(c); }, cmd);
  }

  ConstructionTree finish() const {
    std::vector<int> remap(slots_.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].alive) remap[i] = next++;
    }
    ConstructionTree out;
    for (const Slot& s : slots_) {
      if (!s.alive) continue;
      ConstructionNode n = s.node;
      n.id = remap[static_cast<std::size_t>(n.id)];
      if (n.attach.parent >= 0) n.attach.parent = remap[static_cast<std::size_t>(n.attach.parent)];
      if (n.attach_b) n.attach_b->parent = remap[static_cast<std::size_t>(n.attach_b->parent)];
      out.nodes.push_back(n);
    }
    return out;
  }

 private:
  [[noreturn]] void fail(EditErrorKind k, const std::string& msg) const { throw EditError(k, index_, msg); }

  const Slot& block(int id) const {
    if (id < 0 || id >= static_cast<int>(slots_.size()) || !slots_[static_cast<std::size_t>(id)].alive) {
      fail(EditErrorKind::UnknownBlock, "no block " + br(id));
    }
    return slots_[static_cast<std::size_t>(id)];
  }

  void check_face(int parent, int face) const {
    const BlockSpec& ps = block_spec(block(parent).node.type);
    if (face < 0 || face >= static_cast<int>(ps.faces.size())) {
      fail(EditErrorKind::UnknownFace, "block " + br(parent) + " has no face " + br(face));
    }
  }

  std::optional<int> occupant(int parent, int face) const {
    for (const Slot& s : slots_) {
      if (!s.alive || s.node.two_parent() || s.node.id == 0) continue;
      if (s.node.attach.parent == parent && s.node.attach.face == face) return s.node.id;
    }
    return std::nullopt;
  }

  const BlockSpec& spec_for(int type) const {
    const BlockSpec* s = find_block(type);
    if (s == nullptr || type == kRootType) fail(EditErrorKind::UnknownType, "cannot add block type " + br(type));
    return *s;
  }

  void run(const AddCmd& c) {
    if (spec_for(c.type).is_linear()) {
      fail(EditErrorKind::LinearFormMismatch, "type " + br(c.type) + " needs two attachment points");
    }
    check_face(c.parent, c.face);
    if (occupant(c.parent, c.face)) {
      fail(EditErrorKind::FaceOccupied, "face " + br(c.face) + " of block " + br(c.parent) + " is occupied");
    }
    ConstructionNode n;
    n.type = c.type;
    n.id = static_cast<int>(slots_.size());
    n.attach = {c.parent, c.face};
    slots_.push_back({n, true});
  }

  void run(const AddLinearCmd& c) {
    if (!spec_for(c.type).is_linear()) {
      fail(EditErrorKind::LinearFormMismatch, "type " + br(c.type) + " takes a single attachment point");
    }
    check_face(c.parent_a, c.face_a);
    check_face(c.parent_b, c.face_b);
    ConstructionNode n;
    n.type = c.type;
    n.id = static_cast<int>(slots_.size());
    n.attach = {c.parent_a, c.face_a};
    n.attach_b = Attachment{c.parent_b, c.face_b};
    slots_.push_back({n, true});
  }

  void run(const RemoveCmd& c) {
    block(c.id);
    if (c.id == 0) fail(EditErrorKind::RemoveRoot, "the starting block cannot be removed");
    for (const Slot& s : slots_) {
      if (!s.alive || s.node.id == c.id) continue;
      const bool child = (s.node.id != 0 && s.node.attach.parent == c.id) ||
                         (s.node.attach_b && s.node.attach_b->parent == c.id);
      if (child) fail(EditErrorKind::RemoveHasChildren, "block " + br(c.id) + " has child " + br(s.node.id));
    }
    slots_[static_cast<std::size_t>(c.id)].alive = false;
  }

  void run(const MoveCmd& c) {
    const Slot& s = block(c.id);
    if (c.id == 0) fail(EditErrorKind::MoveRoot, "the starting block cannot be moved");
    if (block_spec(s.node.type).is_linear()) {
      fail(EditErrorKind::MoveLinearForbidden, "two-point block " + br(c.id) + " cannot be moved");
    }
    block(c.new_parent);
    if (c.new_parent >= c.id) {
      fail(EditErrorKind::MoveParentOrder, "new parent " + br(c.new_parent) + " is not smaller than " + br(c.id));
    }
    check_face(c.new_parent, c.new_face);
    const auto occ = occupant(c.new_parent, c.new_face);
    if (occ && *occ != c.id) {
      fail(EditErrorKind::FaceOccupied, "face " + br(c.new_face) + " of block " + br(c.new_parent) + " is occupied");
    }
    slots_[static_cast<std::size_t>(c.id)].node.attach = {c.new_parent, c.new_face};
  }

  std::vector<Slot> slots_;
  int index_ = 0;
};

}  // namespace

std::string print_command(const EditCommand& cmd) {
  struct Printer {
    std::string operator()(const AddCmd& c) const { return "Add " + br(c.type) + " to " + br(c.parent) + " in " + br(c.face); }
    std::string operator()(const AddLinearCmd& c) const {
      return "Add " + br(c.type) + " to " + br(c.parent_a) + " in " + br(c.face_a) + " to " + br(c.parent_b) + " in " +
             br(c.face_b);
    }
    std::string operator()(const RemoveCmd& c) const { return "Remove " + br(c.id); }
    std::string operator()(const MoveCmd& c) const {
      return "Move " + br(c.id) + " to " + br(c.new_parent) + " in " + br(c.new_face);
    }
  };
  return std::visit(Printer{}, cmd);
}

std::string_view to_string(EditErrorKind k) {
  switch (k) {
    case EditErrorKind::RemoveHasChildren: return "RemoveHasChildren";
    case EditErrorKind::RemoveRoot: return "RemoveRoot";
    case EditErrorKind::MoveParentOrder: return "MoveParentOrder";
    case EditErrorKind::MoveLinearForbidden: return "MoveLinearForbidden";
    case EditErrorKind::MoveRoot: return "MoveRoot";
    case EditErrorKind::FaceOccupied: return "FaceOccupied";
    case EditErrorKind::UnknownBlock: return "UnknownBlock";
    case EditErrorKind::UnknownFace: return "UnknownFace";
    case EditErrorKind::UnknownType: return "UnknownType";
    case EditErrorKind::LinearFormMismatch: return "LinearFormMismatch";
  }
  return "?";
}

EditError::EditError(EditErrorKind kind, int command, const std::string& what)
    : std::runtime_error("command " + std::to_string(command) + ": " + what), kind_(kind), command_(command) {}

ConstructionTree apply_edits(const ConstructionTree& tree, const std::vector<EditCommand>& commands) {
  Editor ed(tree);
  for (std::size_t i = 0; i < commands.size(); ++i) ed.apply(commands[i], static_cast<int>(i));
  return ed.finish();
}

}  // namespace mechforge
