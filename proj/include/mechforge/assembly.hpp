// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Construction trees: parsing, structural validation, spatial resolution,
// collision and size checks, and conversion to/from the global pose document.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mechforge/json.hpp"

#include "mechforge/catalog.hpp"
#include "mechforge/geometry.hpp"

namespace mechforge {

struct Attachment {
  int parent = -1;
  int face = -1;

  bool operator==(const Attachment&) const = default;
};

struct ConstructionNode {
  int type = 0;
  int id = 0;
  Attachment attach;                     // parent/face_id, or parent_a/face_id_a
  std::optional<Attachment> attach_b;    // parent_b/face_id_b for two-parent blocks

  bool two_parent() const { return attach_b.has_value(); }
  bool operator==(const ConstructionNode&) const = default;
};

// Ordered block list; ids equal list positions.
struct ConstructionTree {
  std::vector<ConstructionNode> nodes;

  std::size_t size() const { return nodes.size(); }
  bool operator==(const ConstructionTree&) const = default;
};

// ---------------------------------------------------------------- parsing

enum class ParseErrorKind { MalformedDocument, MissingField, IdMismatch, UnknownType };
std::string_view to_string(ParseErrorKind k);

struct ParseDiagnostic {
  ParseErrorKind kind = ParseErrorKind::MalformedDocument;
  int index = -1;       // array position, -1 for document-level problems
  std::string field;    // offending key, if any
  std::string message;
};

struct ParseResult {
  std::optional<ConstructionTree> tree;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return tree.has_value(); }
};

ParseResult parse_tree(std::string_view text);
ParseResult parse_tree_json(const Json& doc);

// Strips one ```json ... ``` (or bare ```) fence; returns the input unchanged if none.
std::string extract_fenced(std::string_view text);
// True if a fenced block is present.
bool has_fence(std::string_view text);

Json tree_to_json(const ConstructionTree& tree);
// One node per line, the layout used by the bundled machine files.
std::string format_tree(const ConstructionTree& tree);

// ------------------------------------------------------ structural checks

enum class StructureErrorKind {
  MissingRoot,
  DuplicateRoot,
  ParentOrder,
  UnknownParent,
  UnknownFace,
  FaceOccupied,
  LinearFormMismatch,
  UnknownType,
};
std::string_view to_string(StructureErrorKind k);

struct StructureViolation {
  StructureErrorKind kind;
  int node = -1;
  std::string message;
};

struct StructureReport {
  std::vector<StructureViolation> violations;
  bool ok() const { return violations.empty(); }
};

StructureReport validate_structure(const ConstructionTree& tree);

// ------------------------------------------------------------ resolution

struct ResolvedBlock {
  int id = 0;
  int type = 0;
  Vec3 position = Vec3::Zero();  // building center, global
  Direction orientation = Direction::ZPos;
  Mat3 rotation = Mat3::Identity();
  Attachment attach;                   // parent/face it was built on; parent -1 for the root
  std::optional<Attachment> attach_b;  // second endpoint of Linear blocks
  std::optional<OrientedBox> world_box;                 // nullopt for Linear blocks
  std::optional<std::pair<Vec3, Vec3>> endpoints;       // Linear blocks: (a, b)
  std::optional<std::pair<Direction, Direction>> endpoint_dirs;

  Vec3 center() const;  // geometric center, global
};

struct OccupiedFace {
  int block = -1;
  int face = -1;
  int by = -1;  // attaching block
};

struct ResolvedMachine {
  std::vector<ResolvedBlock> blocks;
  std::vector<OccupiedFace> occupied;
  std::vector<std::pair<int, int>> auto_connections;  // (lower id, higher id)
};

inline constexpr double kAutoConnectTolerance = 1e-6;

// Pre: validate_structure(tree).ok(). Throws std::invalid_argument otherwise.
ResolvedMachine resolve(const ConstructionTree& tree);

// Global position of an attachable face of a resolved block.
Vec3 face_position(const ResolvedBlock& b, int face_id);
Direction face_direction(const ResolvedBlock& b, int face_id);

// ------------------------------------------------------- spatial checks

inline constexpr double kCollisionShrink = 1e-3;

struct CollisionPair {
  int a = -1;
  int b = -1;
  Aabb overlap;  // intersection of the unshrunk boxes
};

struct CollisionReport {
  std::vector<CollisionPair> pairs;
  bool valid() const { return pairs.empty(); }
};

CollisionReport check_collisions(const ResolvedMachine& machine);

inline constexpr double kMaxLengthZ = 17.0;
inline constexpr double kMaxWidthX = 17.0;
inline constexpr double kMaxHeightY = 9.5;

struct BoundingDims {
  double length_z = 0.0;
  double width_x = 0.0;
  double height_y = 0.0;
  bool exceeds_limits = false;
};

BoundingDims bounding_dims(const ResolvedMachine& machine);

struct ValidityReport {
  bool file_valid = false;
  bool spatial_valid = false;
  bool within_limits = false;
  bool overall = false;
  std::vector<ParseDiagnostic> parse_diagnostics;
  std::vector<StructureViolation> structure_violations;
  std::vector<CollisionPair> collisions;
  std::optional<BoundingDims> dims;
};

ValidityReport machine_validity(std::string_view text);
ValidityReport machine_validity(const ConstructionTree& tree);

// ---------------------------------------------------- global representation

Json to_global(const ConstructionTree& tree);

class UnrecoverableError : public std::runtime_error {
 public:
  UnrecoverableError(int record, const std::string& what);
  int record() const { return record_; }

 private:
  int record_;
};

// Throws UnrecoverableError when a block cannot be tied to any existing face,
// std::invalid_argument when the document is malformed.
ConstructionTree from_global(const Json& doc);

}  // namespace mechforge
