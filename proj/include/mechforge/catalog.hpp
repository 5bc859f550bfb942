// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Built-in block catalog: the 27 usable block types, their attachable faces,
// masses and behavior tags, plus the orientation rules that place a child
// block relative to its parent.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mechforge/json.hpp"

#include "mechforge/geometry.hpp"

namespace mechforge {

// Global axes of the left-handed world frame: x right, y up, z forward.
enum class Direction : std::uint8_t { XPos, XNeg, YPos, YNeg, ZPos, ZNeg };

inline constexpr std::array<Direction, 6> kAllDirections = {
    Direction::XPos, Direction::XNeg, Direction::YPos,
    Direction::YNeg, Direction::ZPos, Direction::ZNeg};

enum class FaceLabel : std::uint8_t { Front, Back, Left, Right, Up, Down };

inline constexpr std::array<FaceLabel, 6> kAllFaceLabels = {
    FaceLabel::Front, FaceLabel::Back, FaceLabel::Left,
    FaceLabel::Right, FaceLabel::Up,   FaceLabel::Down};

Direction negate(Direction d);
Vec3 unit_vector(Direction d);
std::string_view to_string(Direction d);   // "x+", "z-", ...
std::string_view to_string(FaceLabel l);   // "Front", ...
std::optional<Direction> parse_direction(std::string_view s);
std::optional<FaceLabel> parse_face_label(std::string_view s);
// Local unit vector of a label in the canonical z+ frame.
Vec3 local_vector(FaceLabel l);

// Direction a face with `label` points to on a block oriented `parent_orientation`.
Direction transform_direction(Direction parent_orientation, FaceLabel label);

// Rotation taking the canonical z+ block frame to orientation `o`. Columns are
// the world images of local Right, Up and Front.
Mat3 orientation_matrix(Direction o);
QuatXYZW orientation_frame(Direction o);
// Snaps a rotation to one of the six block frames; nullopt if it is none of them.
std::optional<Direction> direction_from_rotation(const Quat& q, double tol = 1e-2);

enum class BlockTag : std::uint8_t {
  NonStatic = 1u << 0,
  NonStable = 1u << 1,
  Linear = 1u << 2,
  PoweredWheel = 1u << 3,
  NoConnect = 1u << 4,
};

struct FaceSpec {
  int face_id = 0;
  Vec3 offset = Vec3::Zero();
  FaceLabel label = FaceLabel::Front;
};

struct BlockSpec {
  int type_id = 0;
  std::string name;
  Vec3 size = Vec3::Zero();  // x, y, z extents in meters; zero for Linear blocks
  std::vector<FaceSpec> faces;
  double mass = 0.0;
  std::uint8_t tags = 0;
  // Joint/motor axis in the block's local frame, for blocks that rotate relative
  // to their parent about a single axis.
  std::optional<FaceLabel> rotation_axis;
  // Axis as given in the block reference; differs from rotation_axis for the
  // hinges (not listed there) and the rotating block (listed as Front).
  std::optional<FaceLabel> listed_axis;

  bool has(BlockTag t) const { return (tags & static_cast<std::uint8_t>(t)) != 0; }
  bool is_linear() const { return has(BlockTag::Linear); }
  // Local collision box; nullopt for Linear blocks.
  std::optional<Aabb> local_box() const;
  // Geometric center in the local frame.
  Vec3 local_center() const;
};

class UnknownTypeError : public std::out_of_range {
 public:
  explicit UnknownTypeError(int type_id);
  int type_id() const { return type_id_; }

 private:
  int type_id_;
};

class UnknownFaceError : public std::out_of_range {
 public:
  UnknownFaceError(int type_id, int face_id);
  int type_id() const { return type_id_; }
  int face_id() const { return face_id_; }

 private:
  int type_id_;
  int face_id_;
};

inline constexpr int kRootType = 0;
inline constexpr int kBraceType = 7;
inline constexpr int kSpringType = 9;
inline constexpr int kBoulderType = 36;
inline constexpr int kContainerType = 30;

// The full catalog, ordered as listed in the block reference. Stable across calls.
std::span<const BlockSpec> load_catalog();
const BlockSpec* find_block(int type_id);
const BlockSpec& block_spec(int type_id);  // throws UnknownTypeError
const FaceSpec& face_lookup(int type_id, int face_id);  // throws UnknownType/UnknownFace

// Catalog document using the reference field names ("Type ID", "Mass", ...).
Json catalog_to_json();

}  // namespace mechforge
