// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/catalog.hpp"

#include <algorithm>
#include <cmath>

namespace mechforge {
namespace {

constexpr std::uint8_t tag(BlockTag t) { return static_cast<std::uint8_t>(t); }

constexpr std::uint8_t kNonStatic = tag(BlockTag::NonStatic);
constexpr std::uint8_t kNonStable = tag(BlockTag::NonStable);
constexpr std::uint8_t kLinear = tag(BlockTag::Linear);
constexpr std::uint8_t kPoweredWheel = tag(BlockTag::PoweredWheel);
constexpr std::uint8_t kNoConnect = tag(BlockTag::NoConnect);

using F = FaceLabel;

FaceSpec face(int id, double x, double y, double z, FaceLabel l) { return {id, Vec3(x, y, z), l}; }

// Five faces shared by the unit cube blocks built on their back face.
std::vector<FaceSpec> cube_faces() {
  return {face(0, 0, 0, 1, F::Front), face(1, -0.5, 0, 0.5, F::Left), face(2, 0.5, 0, 0.5, F::Right),
          face(3, 0, 0.5, 0.5, F::Up), face(4, 0, -0.5, 0.5, F::Down)};
}

std::vector<FaceSpec> two_long_faces() {
  return {face(0, 0, 0, 2, F::Front),     face(1, -0.5, 0, 0.5, F::Left), face(2, -0.5, 0, 1.5, F::Left),
          face(3, 0.5, 0, 0.5, F::Right), face(4, 0.5, 0, 1.5, F::Right), face(5, 0, 0.5, 0.5, F::Up),
          face(6, 0, 0.5, 1.5, F::Up),    face(7, 0, -0.5, 0.5, F::Down), face(8, 0, -0.5, 1.5, F::Down)};
}

std::vector<FaceSpec> large_wheel_faces() {
  return {face(0, 0, 0, 1, F::Front),     face(1, -1.5, 0, 1, F::Front),  face(2, 1.5, 0, 1, F::Front),
          face(3, 0, 1.5, 1, F::Front),   face(4, 0, -1.5, 1, F::Front),  face(5, -1.5, 0, 0.5, F::Left),
          face(6, 1.5, 0, 0.5, F::Right), face(7, 0, 1.5, 0.5, F::Up),    face(8, 0, -1.5, 0.5, F::Down)};
}

std::vector<BlockSpec> build_catalog() {
  std::vector<BlockSpec> c;
  auto add = [&](int type, std::string name, Vec3 size, std::vector<FaceSpec> faces, double mass,
                 std::uint8_t tags = 0, std::optional<FaceLabel> axis = std::nullopt) {
    c.push_back(BlockSpec{type, std::move(name), size, std::move(faces), mass, tags, axis});
  };

  add(0, "Starting Block", {1, 1, 1},
      {face(0, 0, 0, 0.5, F::Front), face(1, 0, 0, -0.5, F::Back), face(2, -0.5, 0, 0, F::Left),
       face(3, 0.5, 0, 0, F::Right), face(4, 0, 0.5, 0, F::Up), face(5, 0, -0.5, 0, F::Down)},
      0.25);
  add(15, "Small Wooden Block", {1, 1, 1}, cube_faces(), 0.3);
  add(1, "Wooden Block", {1, 1, 2}, two_long_faces(), 0.5);
  add(41, "Wooden Rod", {1, 1, 2}, two_long_faces(), 0.5);
  add(63, "Log", {1, 1, 3},
      {face(0, 0, 0, 3, F::Front),      face(1, -0.5, 0, 0.5, F::Left),  face(2, -0.5, 0, 1.5, F::Left),
       face(3, -0.5, 0, 2.5, F::Left),  face(4, 0.5, 0, 0.5, F::Right),  face(5, 0.5, 0, 1.5, F::Right),
       face(6, 0.5, 0, 2.5, F::Right),  face(7, 0, 0.5, 0.5, F::Up),     face(8, 0, 0.5, 1.5, F::Up),
       face(9, 0, 0.5, 2.5, F::Up),     face(10, 0, -0.5, 0.5, F::Down), face(11, 0, -0.5, 1.5, F::Down),
       face(12, 0, -0.5, 2.5, F::Down)},
      1.0);
  add(28, "Steering Hinge", {1, 1, 1}, {face(0, 0, 0, 1, F::Front)}, 1.0, kNonStatic | kNonStable, F::Up);
  add(13, "Steering Block", {1, 1, 1}, cube_faces(), 1.0, kNonStatic | kNonStable, F::Front);
  add(2, "Powered Wheel", {2, 2, 0.5}, {face(0, 0, 0, 0.5, F::Front)}, 1.0,
      kPoweredWheel | kNonStatic | kNonStable, F::Front);
  add(40, "Unpowered Wheel", {2, 2, 0.5}, {face(0, 0, 0, 0.5, F::Front)}, 1.0, kNonStable, F::Front);
  add(46, "Large Powered Wheel", {3, 3, 1}, large_wheel_faces(), 1.0, kPoweredWheel | kNonStatic | kNonStable,
      F::Front);
  add(60, "Large Unpowered Wheel", {3, 3, 1}, large_wheel_faces(), 1.0, kNonStable, F::Front);
  add(50, "Small Wheel", {0.5, 1, 1.5}, {}, 0.5, kNonStable);
  add(86, "Roller Wheel", {1, 1, 1}, {}, 0.5, kNonStable);
  add(19, "Universal Joint", {1, 1, 1}, cube_faces(), 0.5, kNonStable, F::Front);
  add(5, "Hinge", {1, 1, 1}, cube_faces(), 0.5, kNonStable, F::Right);
  add(44, "Ball Joint", {1, 1, 1}, cube_faces(), 0.5, kNonStable);
  add(76, "Axle Connector", {1, 1, 1}, {face(0, 0, 0, 1, F::Front)}, 0.3, kNonStable);
  add(22, "Rotating Block", {1, 1, 1}, cube_faces(), 1.0, kNonStatic | kNonStable, F::Right);
  add(27, "Grabber", {1, 1, 1}, {face(0, 0, 0, 1, F::Front)}, 0.5, kNonStable);
  add(36, "Boulder", {1.9, 1.9, 1.9}, {}, 5.0, kNonStable | kNoConnect);
  add(49, "Grip Pad", {0.8, 0.8, 0.5}, {}, 0.3);
  add(87, "Elastic Pad", {0.8, 0.8, 0.2}, {}, 0.3);
  add(30, "Container", {2.4, 3, 2.8}, {face(0, 0, 0, 1, F::Front)}, 0.5);
  add(16, "Suspension", {1, 1, 2},
      {face(0, 0, 0, 2, F::Front), face(1, -0.5, 0, 1.5, F::Left), face(2, 0.5, 0, 1.5, F::Right),
       face(3, 0, 0.5, 1.5, F::Up), face(4, 0, -0.5, 1.5, F::Down)},
      0.5);
  add(7, "Brace", {0, 0, 0}, {}, 0.5, kLinear);
  add(9, "Spring", {0, 0, 0}, {}, 0.4, kLinear | kNonStatic);
  add(35, "Ballast", {1, 1, 1}, cube_faces(), 3.0);
  for (BlockSpec& b : c) {
    b.listed_axis = b.rotation_axis;
    if (b.type_id == 28 || b.type_id == 5) b.listed_axis.reset();
    if (b.type_id == 22) b.listed_axis = F::Front;
  }
  return c;
}

// Rows of the build-guidance orientation table, indexed [orientation][label]
// with labels in FaceLabel order (Front, Back, Left, Right, Up, Down).
constexpr Direction kOrientationTable[6][6] = {
    // x+
    {Direction::XPos, Direction::XNeg, Direction::ZPos, Direction::ZNeg, Direction::YPos, Direction::YNeg},
    // x-
    {Direction::XNeg, Direction::XPos, Direction::ZNeg, Direction::ZPos, Direction::YPos, Direction::YNeg},
    // y+
    {Direction::YPos, Direction::YNeg, Direction::XNeg, Direction::XPos, Direction::ZNeg, Direction::ZPos},
    // y-
    {Direction::YNeg, Direction::YPos, Direction::XNeg, Direction::XPos, Direction::ZPos, Direction::ZNeg},
    // z+
    {Direction::ZPos, Direction::ZNeg, Direction::XNeg, Direction::XPos, Direction::YPos, Direction::YNeg},
    // z-
    {Direction::ZNeg, Direction::ZPos, Direction::XPos, Direction::XNeg, Direction::YPos, Direction::YNeg},
};

}  // namespace

Direction negate(Direction d) {
  switch (d) {
    case Direction::XPos: return Direction::XNeg;
    case Direction::XNeg: return Direction::XPos;
    case Direction::YPos: return Direction::YNeg;
    case Direction::YNeg: return Direction::YPos;
    case Direction::ZPos: return Direction::ZNeg;
    case Direction::ZNeg: return Direction::ZPos;
  }
  return d;
}

Vec3 unit_vector(Direction d) {
  switch (d) {
    case Direction::XPos: return Vec3::UnitX();
    case Direction::XNeg: return -Vec3::UnitX();
    case Direction::YPos: return Vec3::UnitY();
    case Direction::YNeg: return -Vec3::UnitY();
    case Direction::ZPos: return Vec3::UnitZ();
    case Direction::ZNeg: return -Vec3::UnitZ();
  }
  return Vec3::Zero();
}

std::string_view to_string(Direction d) {
  static constexpr std::string_view names[] = {"x+", "x-", "y+", "y-", "z+", "z-"};
  return names[static_cast<int>(d)];
}

std::string_view to_string(FaceLabel l) {
  static constexpr std::string_view names[] = {"Front", "Back", "Left", "Right", "Up", "Down"};
  return names[static_cast<int>(l)];
}

std::optional<Direction> parse_direction(std::string_view s) {
  for (Direction d : kAllDirections) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

std::optional<FaceLabel> parse_face_label(std::string_view s) {
  for (FaceLabel l : kAllFaceLabels) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

Vec3 local_vector(FaceLabel l) { return unit_vector(transform_direction(Direction::ZPos, l)); }

Direction transform_direction(Direction parent_orientation, FaceLabel label) {
  return kOrientationTable[static_cast<int>(parent_orientation)][static_cast<int>(label)];
}

Mat3 orientation_matrix(Direction o) {
  Mat3 m;
  m.col(0) = unit_vector(transform_direction(o, FaceLabel::Right));
  m.col(1) = unit_vector(transform_direction(o, FaceLabel::Up));
  m.col(2) = unit_vector(transform_direction(o, FaceLabel::Front));
  return m;
}

QuatXYZW orientation_frame(Direction o) { return to_xyzw(canonical(Quat(orientation_matrix(o)))); }

std::optional<Direction> direction_from_rotation(const Quat& q, double tol) {
  const Mat3 m = q.normalized().toRotationMatrix();
  for (Direction d : kAllDirections) {
    if ((m - orientation_matrix(d)).cwiseAbs().maxCoeff() <= tol) return d;
  }
  return std::nullopt;
}

std::optional<Aabb> BlockSpec::local_box() const {
  if (is_linear()) return std::nullopt;
  const Vec3 h = 0.5 * size;
  if (type_id == kRootType) return Aabb{-h, h};
  return Aabb{Vec3(-h.x(), -h.y(), 0.0), Vec3(h.x(), h.y(), size.z())};
}

Vec3 BlockSpec::local_center() const {
  if (type_id == kRootType || is_linear()) return Vec3::Zero();
  return Vec3(0.0, 0.0, 0.5 * size.z());
}

UnknownTypeError::UnknownTypeError(int type_id)
    : std::out_of_range("unknown block type " + std::to_string(type_id)), type_id_(type_id) {}

UnknownFaceError::UnknownFaceError(int type_id, int face_id)
    : std::out_of_range("block type " + std::to_string(type_id) + " has no attachable face " +
                        std::to_string(face_id)),
      type_id_(type_id),
      face_id_(face_id) {}

std::span<const BlockSpec> load_catalog() {
  static const std::vector<BlockSpec> catalog = build_catalog();
  return catalog;
}

const BlockSpec* find_block(int type_id) {
  const auto cat = load_catalog();
  const auto it = std::find_if(cat.begin(), cat.end(), [&](const BlockSpec& b) { return b.type_id == type_id; });
  return it == cat.end() ? nullptr : &*it;
}

const BlockSpec& block_spec(int type_id) {
  const BlockSpec* b = find_block(type_id);
  if (b == nullptr) throw UnknownTypeError(type_id);
  return *b;
}

const FaceSpec& face_lookup(int type_id, int face_id) {
  const BlockSpec& b = block_spec(type_id);
  if (face_id < 0 || face_id >= static_cast<int>(b.faces.size())) throw UnknownFaceError(type_id, face_id);
  return b.faces[static_cast<std::size_t>(face_id)];
}

Json catalog_to_json() {

  Json out = Json::array();
  for (const BlockSpec& b : load_catalog()) {
    Json j;
    j["Name"] = b.name;
    j["Type ID"] = b.type_id;
    if (!b.is_linear()) j["Size"] = {b.size.x(), b.size.y(), b.size.z()};
    if (!b.faces.empty()) {
      Json faces = Json::array();
      for (const FaceSpec& f : b.faces) {
        faces.push_back({{"ID", f.face_id},
                         {"Coordinates", {f.offset.x(), f.offset.y(), f.offset.z()}},
                         {"Orientation", to_string(f.label)}});
      }
      j["Attachable Faces Properties"] = std::move(faces);
    }
    Json special = Json::object();
    if (b.listed_axis) special["Rotation Axis"] = to_string(*b.listed_axis);
    if (b.has(BlockTag::Linear)) special["Linear"] = "True";
    if (b.has(BlockTag::PoweredWheel)) special["PoweredWheel"] = "True";
    if (b.has(BlockTag::NonStatic)) special["NonStatic"] = "True";
    if (b.has(BlockTag::NonStable)) special["NonStable"] = "True";
    if (!special.empty()) j["Special Attributes"] = std::move(special);
    j["Mass"] = b.mass;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace mechforge
