// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/assembly.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace mechforge {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Accepts JSON integers, integral floats and strings holding an integer.
std::optional<int> as_int(const Json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e9) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string s = trim(v.get<std::string>());
    int out = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec == std::errc() && ptr == last && first != last) return out;
  }
  return std::nullopt;
}

std::optional<int> read_field(const Json& obj, const char* key, int index, std::vector<ParseDiagnostic>& diags) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    diags.push_back({ParseErrorKind::MissingField, index, key, std::string("missing field \"") + key + "\""});
    return std::nullopt;
  }
  auto v = as_int(*it);
  if (!v) {
    diags.push_back({ParseErrorKind::MalformedDocument, index, key,
                     std::string("field \"") + key + "\" is not an integer"});
  }
  return v;
}

ResolvedBlock place_block(const ConstructionNode& node, const std::vector<ResolvedBlock>& placed) {
  const BlockSpec& spec = block_spec(node.type);
  ResolvedBlock rb;
  rb.id = node.id;
  rb.type = node.type;
  rb.attach = node.attach;
  rb.attach_b = node.attach_b;
  if (node.type == kRootType && node.attach.parent < 0) {
    rb.world_box = OrientedBox{Vec3::Zero(), 0.5 * spec.size, Mat3::Identity()};
    return rb;
  }
  const ResolvedBlock& pa = placed.at(static_cast<std::size_t>(node.attach.parent));
  if (spec.is_linear()) {
    const ResolvedBlock& pb = placed.at(static_cast<std::size_t>(node.attach_b->parent));
    const Vec3 a = face_position(pa, node.attach.face);
    const Vec3 b = face_position(pb, node.attach_b->face);
    const Direction da = face_direction(pa, node.attach.face);
    const Direction db = face_direction(pb, node.attach_b->face);
    rb.position = b;
    rb.orientation = db;
    rb.rotation = orientation_matrix(db);
    rb.endpoints = std::make_pair(a, b);
    rb.endpoint_dirs = std::make_pair(da, db);
    return rb;
  }
  rb.position = face_position(pa, node.attach.face);
  rb.orientation = face_direction(pa, node.attach.face);
  rb.rotation = orientation_matrix(rb.orientation);
  rb.world_box = OrientedBox{rb.position + rb.rotation * spec.local_center(), 0.5 * spec.size, rb.rotation};
  return rb;
}

bool close(const Vec3& a, const Vec3& b, double tol) { return (a - b).cwiseAbs().maxCoeff() <= tol; }

// Rounds away float noise so emitted coordinates read as the exact half-grid values.
double clean(double v) {
  if (std::abs(v) < 1e-12) return 0.0;
  const double r = std::round(v * 1e9) / 1e9;
  return std::abs(r - v) < 1e-12 ? r : v;
}

Json vec_json(const Vec3& v) { return Json::array({clean(v.x()), clean(v.y()), clean(v.z())}); }

std::optional<Vec3> read_vec3(const Json& v) {
  if (!v.is_array() || v.size() != 3) return std::nullopt;
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) return std::nullopt;
    out[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

constexpr double kGlobalMatchTolerance = 1e-3;

}  // namespace

std::string_view to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::MalformedDocument: return "MalformedDocument";
    case ParseErrorKind::MissingField: return "MissingField";
    case ParseErrorKind::IdMismatch: return "IdMismatch";
    case ParseErrorKind::UnknownType: return "UnknownType";
  }
  return "?";
}

std::string_view to_string(StructureErrorKind k) {
  switch (k) {
    case StructureErrorKind::MissingRoot: return "MissingRoot";
    case StructureErrorKind::DuplicateRoot: return "DuplicateRoot";
    case StructureErrorKind::ParentOrder: return "ParentOrder";
    case StructureErrorKind::UnknownParent: return "UnknownParent";
    case StructureErrorKind::UnknownFace: return "UnknownFace";
    case StructureErrorKind::FaceOccupied: return "FaceOccupied";
    case StructureErrorKind::LinearFormMismatch: return "LinearFormMismatch";
    case StructureErrorKind::UnknownType: return "UnknownType";
  }
  return "?";
}

// ---------------------------------------------------------------- parsing

ParseResult parse_tree(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    ParseResult r;
    r.diagnostics.push_back({ParseErrorKind::MalformedDocument, -1, "", e.what()});
    return r;
  }
  return parse_tree_json(doc);
}

ParseResult parse_tree_json(const Json& doc) {
  ParseResult r;
  if (!doc.is_array()) {
    r.diagnostics.push_back({ParseErrorKind::MalformedDocument, -1, "", "document is not an array"});
    return r;
  }
  if (doc.empty()) {
    r.diagnostics.push_back({ParseErrorKind::MalformedDocument, -1, "", "document has no blocks"});
    return r;
  }
  ConstructionTree tree;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const int index = static_cast<int>(i);
    const Json& obj = doc[i];
    if (!obj.is_object()) {
      r.diagnostics.push_back({ParseErrorKind::MalformedDocument, index, "", "block entry is not an object"});
      continue;
    }
    const std::size_t before = r.diagnostics.size();
    ConstructionNode node;
    const auto type = read_field(obj, "type", index, r.diagnostics);
    const auto id = read_field(obj, "id", index, r.diagnostics);
    if (obj.contains("parent_a") || obj.contains("parent_b")) {
      const auto pa = read_field(obj, "parent_a", index, r.diagnostics);
      const auto fa = read_field(obj, "face_id_a", index, r.diagnostics);
      const auto pb = read_field(obj, "parent_b", index, r.diagnostics);
      const auto fb = read_field(obj, "face_id_b", index, r.diagnostics);
      if (pa && fa && pb && fb) {
        node.attach = {*pa, *fa};
        node.attach_b = Attachment{*pb, *fb};
      }
    } else {
      const auto p = read_field(obj, "parent", index, r.diagnostics);
      const auto f = read_field(obj, "face_id", index, r.diagnostics);
      if (p && f) node.attach = {*p, *f};
    }
    if (type) {
      node.type = *type;
      if (find_block(*type) == nullptr) {
        r.diagnostics.push_back(
            {ParseErrorKind::UnknownType, index, "type", "unknown block type " + std::to_string(*type)});
      }
    }
    if (id) {
      node.id = *id;
      if (*id != index) {
        r.diagnostics.push_back({ParseErrorKind::IdMismatch, index, "id",
                                 "id " + std::to_string(*id) + " at position " + std::to_string(index)});
      }
    }
    if (r.diagnostics.size() == before) tree.nodes.push_back(node);
  }
  if (r.diagnostics.empty()) r.tree = std::move(tree);
  return r;
}

std::string extract_fenced(std::string_view text) {
  const std::size_t open = text.find("```");
  if (open == std::string_view::npos) return std::string(text);
  std::size_t body = text.find('\n', open + 3);
  if (body == std::string_view::npos) return std::string(text);
  ++body;
  const std::size_t close = text.find("```", body);
  if (close == std::string_view::npos) return std::string(text.substr(body));
  return std::string(text.substr(body, close - body));
}

bool has_fence(std::string_view text) { return text.find("```") != std::string_view::npos; }

Json tree_to_json(const ConstructionTree& tree) {
  Json out = Json::array();
  for (const ConstructionNode& n : tree.nodes) {
    Json j;
    j["type"] = n.type;
    j["id"] = n.id;
    if (n.two_parent()) {
      j["parent_a"] = n.attach.parent;
      j["face_id_a"] = n.attach.face;
      j["parent_b"] = n.attach_b->parent;
      j["face_id_b"] = n.attach_b->face;
    } else {
      j["parent"] = n.attach.parent;
      j["face_id"] = n.attach.face;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::string format_tree(const ConstructionTree& tree) {
  const Json doc = tree_to_json(tree);
  std::string out = "[\n";
  for (std::size_t i = 0; i < doc.size(); ++i) {
    out += "  ";
    std::string line = doc[i].dump();
    // dump() emits no spaces; add them after separators for readability.
    std::string spaced;
    for (char c : line) {
      spaced += c;
      if (c == ',' || c == ':') spaced += ' ';
    }
    out += spaced;
    out += i + 1 < doc.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

// ------------------------------------------------------ structural checks

StructureReport validate_structure(const ConstructionTree& tree) {
  StructureReport rep;
  auto add = [&](StructureErrorKind k, int node, std::string msg) { rep.violations.push_back({k, node, std::move(msg)}); };
  const auto& nodes = tree.nodes;
  if (nodes.empty() || nodes[0].type != kRootType || nodes[0].two_parent() || nodes[0].attach.parent != -1) {
    add(StructureErrorKind::MissingRoot, 0, "block 0 must be the starting block with parent -1");
  }
  std::set<std::pair<int, int>> used;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const ConstructionNode& n = nodes[i];
    const int id = static_cast<int>(i);
    if (n.id != id) add(StructureErrorKind::ParentOrder, id, "id does not match list position");
    const BlockSpec* spec = find_block(n.type);
    if (spec == nullptr) {
      add(StructureErrorKind::UnknownType, id, "unknown block type " + std::to_string(n.type));
      continue;
    }
    if (i == 0) continue;
    if (n.type == kRootType) {
      add(StructureErrorKind::DuplicateRoot, id, "only block 0 may be a starting block");
      continue;
    }
    if (spec->is_linear() != n.two_parent()) {
      add(StructureErrorKind::LinearFormMismatch, id,
          spec->is_linear() ? "two-parent block needs parent_a/parent_b" : "single-parent block given two parents");
      continue;
    }
    std::vector<Attachment> links{n.attach};
    if (n.attach_b) links.push_back(*n.attach_b);
    bool ok = true;
    for (const Attachment& a : links) {
      if (a.parent < 0 || a.parent >= static_cast<int>(nodes.size())) {
        add(StructureErrorKind::UnknownParent, id, "parent " + std::to_string(a.parent) + " does not exist");
        ok = false;
        continue;
      }
      if (a.parent >= id) {
        add(StructureErrorKind::ParentOrder, id, "parent " + std::to_string(a.parent) + " is not an earlier block");
        ok = false;
        continue;
      }
      const BlockSpec* ps = find_block(nodes[static_cast<std::size_t>(a.parent)].type);
      if (ps == nullptr || a.face < 0 || a.face >= static_cast<int>(ps->faces.size())) {
        add(StructureErrorKind::UnknownFace, id,
            "block " + std::to_string(a.parent) + " has no face " + std::to_string(a.face));
        ok = false;
      }
    }
    if (!ok || spec->is_linear()) continue;
    if (!used.insert({n.attach.parent, n.attach.face}).second) {
      add(StructureErrorKind::FaceOccupied, id,
          "face " + std::to_string(n.attach.face) + " of block " + std::to_string(n.attach.parent) +
              " is already occupied");
    }
  }
  return rep;
}

// ------------------------------------------------------------ resolution

Vec3 ResolvedBlock::center() const {
  if (world_box) return world_box->center;
  if (endpoints) return 0.5 * (endpoints->first + endpoints->second);
  return position;
}

Vec3 face_position(const ResolvedBlock& b, int face_id) {
  return b.position + b.rotation * face_lookup(b.type, face_id).offset;
}

Direction face_direction(const ResolvedBlock& b, int face_id) {
  return transform_direction(b.orientation, face_lookup(b.type, face_id).label);
}

ResolvedMachine resolve(const ConstructionTree& tree) {
  const StructureReport rep = validate_structure(tree);
  if (!rep.ok()) throw std::invalid_argument("cannot resolve: " + rep.violations.front().message);
  ResolvedMachine m;
  m.blocks.reserve(tree.size());
  for (const ConstructionNode& n : tree.nodes) {
    m.blocks.push_back(place_block(n, m.blocks));
    if (n.id > 0 && !n.two_parent()) m.occupied.push_back({n.attach.parent, n.attach.face, n.id});
  }
  // Faces of different blocks that coincide without a tree edge join as well.
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    const BlockSpec& si = block_spec(m.blocks[i].type);
    if (si.faces.empty()) continue;
    for (std::size_t j = i + 1; j < m.blocks.size(); ++j) {
      const BlockSpec& sj = block_spec(m.blocks[j].type);
      if (sj.faces.empty()) continue;
      const ConstructionNode& nj = tree.nodes[j];
      if (!nj.two_parent() && nj.attach.parent == static_cast<int>(i)) continue;
      bool touch = false;
      for (const FaceSpec& fi : si.faces) {
        const Vec3 pi = face_position(m.blocks[i], fi.face_id);
        for (const FaceSpec& fj : sj.faces) {
          if (close(pi, face_position(m.blocks[j], fj.face_id), kAutoConnectTolerance)) {
            touch = true;
            break;
          }
        }
        if (touch) break;
      }
      if (touch) m.auto_connections.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return m;
}

// ------------------------------------------------------- spatial checks

CollisionReport check_collisions(const ResolvedMachine& machine) {
  CollisionReport rep;
  std::vector<std::pair<int, Aabb>> boxes;
  for (const ResolvedBlock& b : machine.blocks) {
    const BlockSpec& s = block_spec(b.type);
    if (!b.world_box || s.has(BlockTag::NoConnect)) continue;
    boxes.emplace_back(b.id, b.world_box->aabb());
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Aabb si = boxes[i].second.shrunk(kCollisionShrink);
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (si.overlaps(boxes[j].second.shrunk(kCollisionShrink))) {
        rep.pairs.push_back({boxes[i].first, boxes[j].first, boxes[i].second.intersection(boxes[j].second)});
      }
    }
  }
  return rep;
}

BoundingDims bounding_dims(const ResolvedMachine& machine) {
  std::optional<Aabb> all;
  for (const ResolvedBlock& b : machine.blocks) {
    if (!b.world_box) continue;
    const Aabb box = b.world_box->aabb();
    all = all ? all->merged(box) : box;
  }
  BoundingDims d;
  if (!all) return d;
  const Vec3 e = all->extents();
  d.width_x = e.x();
  d.height_y = e.y();
  d.length_z = e.z();
  constexpr double tol = 1e-9;
  d.exceeds_limits = d.length_z > kMaxLengthZ + tol || d.width_x > kMaxWidthX + tol || d.height_y > kMaxHeightY + tol;
  return d;
}

ValidityReport machine_validity(const ConstructionTree& tree) {
  ValidityReport r;
  const StructureReport s = validate_structure(tree);
  r.structure_violations = s.violations;
  if (!s.ok()) return r;
  r.file_valid = true;
  const ResolvedMachine m = resolve(tree);
  r.collisions = check_collisions(m).pairs;
  r.spatial_valid = r.collisions.empty();
  r.dims = bounding_dims(m);
  r.within_limits = !r.dims->exceeds_limits;
  r.overall = r.file_valid && r.spatial_valid && r.within_limits;
  return r;
}

ValidityReport machine_validity(std::string_view text) {
  ParseResult p = parse_tree(extract_fenced(text));
  if (!p.ok()) {
    ValidityReport r;
    r.parse_diagnostics = std::move(p.diagnostics);
    return r;
  }
  return machine_validity(*p.tree);
}

// ---------------------------------------------------- global representation

UnrecoverableError::UnrecoverableError(int record, const std::string& what)
    : std::runtime_error("record " + std::to_string(record) + ": " + what), record_(record) {}

Json to_global(const ConstructionTree& tree) {
  const ResolvedMachine m = resolve(tree);
  Json out = Json::array();
  for (const ResolvedBlock& b : m.blocks) {
    Json j;
    j["type"] = b.type;
    j["Position"] = vec_json(b.position);
    const QuatXYZW q = orientation_frame(b.orientation);
    j["Rotation"] = Json::array({clean(q.x), clean(q.y), clean(q.z), clean(q.w)});
    if (b.endpoints) j["end-position"] = vec_json(b.rotation.transpose() * (b.endpoints->first - b.endpoints->second));
    out.push_back(std::move(j));
  }
  return out;
}

ConstructionTree from_global(const Json& doc) {
  if (!doc.is_array() || doc.empty()) throw std::invalid_argument("global document must be a non-empty array");
  ConstructionTree tree;
  std::vector<ResolvedBlock> placed;
  std::set<std::pair<int, int>> used;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const int id = static_cast<int>(k);
    const Json& rec = doc[k];
    if (!rec.is_object() || !rec.contains("type") || !rec.contains("Position") || !rec.contains("Rotation")) {
      throw std::invalid_argument("record " + std::to_string(id) + " needs type, Position and Rotation");
    }
    const auto type = as_int(rec["type"]);
    const auto pos = read_vec3(rec["Position"]);
    const Json& rj = rec["Rotation"];
    if (!type || !pos || !rj.is_array() || rj.size() != 4 ||
        !std::all_of(rj.begin(), rj.end(), [](const Json& v) { return v.is_number(); })) {
      throw std::invalid_argument("record " + std::to_string(id) + " is malformed");
    }
    const BlockSpec* spec = find_block(*type);
    if (spec == nullptr) throw UnrecoverableError(id, "unknown block type " + std::to_string(*type));
    const Quat q(rj[3].get<double>(), rj[0].get<double>(), rj[1].get<double>(), rj[2].get<double>());
    if (q.norm() < 1e-9) throw std::invalid_argument("record " + std::to_string(id) + " has a zero rotation");
    const auto dir = direction_from_rotation(q);
    if (!dir) throw UnrecoverableError(id, "rotation is not an axis-aligned block frame");

    ConstructionNode node;
    node.type = *type;
    node.id = id;
    if (k == 0) {
      if (*type != kRootType || !close(*pos, Vec3::Zero(), kGlobalMatchTolerance) || *dir != Direction::ZPos) {
        throw UnrecoverableError(0, "first record must be the starting block at the origin");
      }
    } else if (spec->is_linear()) {
      const auto end = rec.contains("end-position") ? read_vec3(rec["end-position"]) : std::nullopt;
      if (!end) throw UnrecoverableError(id, "two-parent block without end-position");
      const Vec3 a = *pos + orientation_matrix(*dir) * *end;
      auto find_face = [&](const Vec3& p) -> std::optional<Attachment> {
        for (const ResolvedBlock& b : placed) {
          for (const FaceSpec& f : block_spec(b.type).faces) {
            if (close(face_position(b, f.face_id), p, kGlobalMatchTolerance)) return Attachment{b.id, f.face_id};
          }
        }
        return std::nullopt;
      };
      const auto fa = find_face(a);
      const auto fb = find_face(*pos);
      if (!fa || !fb) throw UnrecoverableError(id, "endpoint does not touch any attachable face");
      node.attach = *fa;
      node.attach_b = *fb;
    } else {
      std::optional<Attachment> hit;
      for (const ResolvedBlock& b : placed) {
        for (const FaceSpec& f : block_spec(b.type).faces) {
          if (used.count({b.id, f.face_id}) != 0) continue;
          if (face_direction(b, f.face_id) != *dir) continue;
          if (close(face_position(b, f.face_id), *pos, kGlobalMatchTolerance)) {
            hit = Attachment{b.id, f.face_id};
            break;
          }
        }
        if (hit) break;
      }
      if (!hit) throw UnrecoverableError(id, "no vacant face matches the block pose");
      node.attach = *hit;
      used.insert({hit->parent, hit->face});
    }
    if (k > 0 && *type == kRootType) throw UnrecoverableError(id, "second starting block");
    tree.nodes.push_back(node);
    placed.push_back(place_block(node, placed));
  }
  return tree;
}

}  // namespace mechforge
