// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mechforge {
namespace {

constexpr int kBallJointType = 44;
constexpr int kAxleConnectorType = 76;
constexpr int kSmallWheelType = 50;
constexpr int kRollerWheelType = 86;
constexpr int kGrabberType = 27;
constexpr int kRotatingType = 22;
constexpr int kSteeringHingeType = 28;
constexpr int kSteeringBlockType = 13;
constexpr int kLargePoweredWheelType = 46;
constexpr int kGripPadType = 49;
constexpr int kElasticPadType = 87;

bool is_wheel(int type) { return type == 2 || type == 40 || type == 46 || type == 60; }
bool is_caster(int type) { return type == kSmallWheelType || type == kRollerWheelType; }

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int i) {
    while (parent_[static_cast<std::size_t>(i)] != i) {
      parent_[static_cast<std::size_t>(i)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(i)])];
      i = parent_[static_cast<std::size_t>(i)];
    }
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Lower id becomes the representative so body order follows block order.
    if (b < a) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
  }

 private:
  std::vector<int> parent_;
};

// Inertia of a block about its own center, in its local axes.
Mat3 local_inertia(const BlockSpec& s) {
  const double m = s.mass;
  if (s.type_id == kBoulderType || is_caster(s.type_id)) {
    const double r = 0.5 * std::min(s.size.y(), s.size.z());
    return Mat3::Identity() * (0.4 * m * r * r);
  }
  if (is_wheel(s.type_id)) {
    const double r = 0.5 * s.size.x();
    const double h = s.size.z();
    const double side = m * (3 * r * r + h * h) / 12.0;
    return Vec3(side, side, 0.5 * m * r * r).asDiagonal();
  }
  const Vec3 e = s.size;
  return Vec3(m * (e.y() * e.y() + e.z() * e.z()) / 12.0, m * (e.x() * e.x() + e.z() * e.z()) / 12.0,
              m * (e.x() * e.x() + e.y() * e.y()) / 12.0)
      .asDiagonal();
}

Mat3 shifted(const Mat3& inertia, double m, const Vec3& d) {
  return inertia + m * (d.squaredNorm() * Mat3::Identity() - d * d.transpose());
}

struct MassPoint {
  double m;
  Vec3 c;      // world
  Mat3 inertia;  // world axes, about c
};

// Wheel push direction by the axis the wheel faces; nullopt when it cannot drive.
std::optional<Vec3> wheel_push(Direction axis) {
  switch (axis) {
    case Direction::XPos:
    case Direction::XNeg: return Vec3::UnitZ();
    case Direction::ZPos: return -Vec3::UnitX();
    case Direction::ZNeg: return Vec3::UnitX();
    default: return std::nullopt;
  }
}

std::vector<Shape> block_shapes(const BlockSpec& s, const ResolvedBlock& b, const Scenario& sc) {
  std::vector<Shape> out;
  const Vec3 center = b.world_box->center;
  auto base = [&]() {
    Shape sh;
    sh.block = b.id;
    sh.center = center;
    sh.rotation = b.rotation;
    sh.friction = sc.friction;
    if (s.type_id == kGripPadType) sh.friction = sc.grip_friction;
    if (s.type_id == kElasticPadType) sh.restitution = sc.elastic_restitution;
    return sh;
  };
  if (s.type_id == kBoulderType || is_caster(s.type_id)) {
    Shape sh = base();
    sh.kind = ShapeKind::Sphere;
    sh.radius = 0.5 * std::min(s.size.y(), s.size.z());
    out.push_back(sh);
  } else if (is_wheel(s.type_id)) {
    Shape sh = base();
    sh.kind = ShapeKind::Cylinder;
    sh.radius = 0.5 * s.size.x();
    sh.half = Vec3(sh.radius, sh.radius, 0.5 * s.size.z());
    out.push_back(sh);
  } else if (s.type_id == kContainerType) {
    // Open cup: a floor slab and four thin rails around the load space.
    const double hx = 0.5 * s.size.x();
    const double hy = 0.5 * s.size.y();
    const double floor = 1.0;
    const double top = s.size.z();
    const double rail = 0.1;
    const Aabb parts[] = {
        {Vec3(-hx, -hy, 0), Vec3(hx, hy, floor)},
        {Vec3(-hx, -hy, floor), Vec3(-hx + rail, hy, top)},
        {Vec3(hx - rail, -hy, floor), Vec3(hx, hy, top)},
        {Vec3(-hx + rail, -hy, floor), Vec3(hx - rail, -hy + rail, top)},
        {Vec3(-hx + rail, hy - rail, floor), Vec3(hx - rail, hy, top)},
    };
    for (const Aabb& p : parts) {
      Shape sh = base();
      sh.center = b.position + b.rotation * p.center();
      sh.half = 0.5 * p.extents();
      out.push_back(sh);
    }
  } else {
    Shape sh = base();
    sh.half = b.world_box->half_extents;
    out.push_back(sh);
  }
  return out;
}

}  // namespace

Mat3 RigidBody::world_inv_inertia() const {
  const Mat3 r = q.toRotationMatrix();
  return r * inv_inertia * r.transpose();
}

World build_world(const ResolvedMachine& machine, const Scenario& scenario) {
  World w;
  w.scenario = scenario;
  const auto& blocks = machine.blocks;
  const std::size_t n = blocks.size();

  double min_y = 0.0;
  bool any = false;
  for (const ResolvedBlock& b : blocks) {
    if (!b.world_box) continue;
    const double y = b.world_box->aabb().min.y();
    min_y = any ? std::min(min_y, y) : y;
    any = true;
  }
  w.spawn_offset = Vec3(0.0, scenario.spawn_height - min_y, 0.0);

  // Stable attachments merge into one body; NonStable blocks hinge on their parent.
  UnionFind uf(n);
  for (const ResolvedBlock& b : blocks) {
    if (b.id == 0 || b.attach_b) continue;
    if (block_spec(b.type).has(BlockTag::NonStable)) continue;
    uf.unite(b.id, b.attach.parent);
  }
  std::vector<int> body_of(n, -1);
  std::vector<int> rep_body(n, -1);
  for (const ResolvedBlock& b : blocks) {
    if (b.attach_b) continue;
    const int r = uf.find(b.id);
    if (rep_body[static_cast<std::size_t>(r)] < 0) {
      rep_body[static_cast<std::size_t>(r)] = static_cast<int>(w.bodies.size());
      w.bodies.emplace_back();
    }
    body_of[static_cast<std::size_t>(b.id)] = rep_body[static_cast<std::size_t>(r)];
  }

  // Mass properties, with Linear blocks split between their endpoint bodies.
  std::vector<std::vector<MassPoint>> points(w.bodies.size());
  for (const ResolvedBlock& b : blocks) {
    const BlockSpec& s = block_spec(b.type);
    if (b.attach_b) {
      const int ba = body_of[static_cast<std::size_t>(b.attach.parent)];
      const int bb = body_of[static_cast<std::size_t>(b.attach_b->parent)];
      points[static_cast<std::size_t>(ba)].push_back({0.5 * s.mass, b.endpoints->first + w.spawn_offset, Mat3::Zero()});
      points[static_cast<std::size_t>(bb)].push_back({0.5 * s.mass, b.endpoints->second + w.spawn_offset, Mat3::Zero()});
      continue;
    }
    const int bi = body_of[static_cast<std::size_t>(b.id)];
    w.bodies[static_cast<std::size_t>(bi)].blocks.push_back(b.id);
    points[static_cast<std::size_t>(bi)].push_back(
        {s.mass, b.world_box->center + w.spawn_offset, b.rotation * local_inertia(s) * b.rotation.transpose()});
  }
  for (std::size_t i = 0; i < w.bodies.size(); ++i) {
    RigidBody& body = w.bodies[i];
    double m = 0.0;
    Vec3 c = Vec3::Zero();
    for (const MassPoint& p : points[i]) {
      m += p.m;
      c += p.m * p.c;
    }
    c /= m;
    Mat3 inertia = Mat3::Zero();
    for (const MassPoint& p : points[i]) inertia += shifted(p.inertia, p.m, p.c - c);
    body.mass = m;
    body.inv_mass = 1.0 / m;
    body.x = c;
    body.inertia = inertia;
    body.inv_inertia = inertia.inverse();
  }

  // Collision shapes and block bindings.
  w.blocks.resize(n);
  for (const ResolvedBlock& b : blocks) {
    const BlockSpec& s = block_spec(b.type);
    BlockBinding& bind = w.blocks[static_cast<std::size_t>(b.id)];
    bind.id = b.id;
    bind.type = b.type;
    if (b.attach_b) {
      bind.linear = true;
      bind.body = body_of[static_cast<std::size_t>(b.attach.parent)];
      bind.body_b = body_of[static_cast<std::size_t>(b.attach_b->parent)];
      bind.anchor_a = b.endpoints->first + w.spawn_offset - w.bodies[static_cast<std::size_t>(bind.body)].x;
      bind.anchor_b = b.endpoints->second + w.spawn_offset - w.bodies[static_cast<std::size_t>(bind.body_b)].x;
      bind.rotation = Quat(b.rotation);
      continue;
    }
    RigidBody& body = w.bodies[static_cast<std::size_t>(body_of[static_cast<std::size_t>(b.id)])];
    bind.body = body_of[static_cast<std::size_t>(b.id)];
    bind.center = b.world_box->center + w.spawn_offset - body.x;
    bind.rotation = Quat(b.rotation);
    for (Shape sh : block_shapes(s, b, scenario)) {
      sh.center = sh.center + w.spawn_offset - body.x;
      body.shapes.push_back(sh);
    }
  }

  auto body_mass = [&](int bi) { return w.bodies[static_cast<std::size_t>(bi)].mass; };
  auto add_weld = [&](int a, int bb, const Vec3& anchor_world, int block) {
    Joint j;
    j.kind = JointKind::Fixed;
    j.a = a;
    j.b = bb;
    j.block = block;
    j.anchor_a = anchor_world - w.bodies[static_cast<std::size_t>(a)].x;
    j.anchor_b = anchor_world - w.bodies[static_cast<std::size_t>(bb)].x;
    j.break_force = scenario.break_threshold * std::min(body_mass(a), body_mass(bb));
    w.joints.push_back(j);
  };

  // Joints for NonStable blocks, in block order.
  for (const ResolvedBlock& b : blocks) {
    if (b.id == 0 || b.attach_b) continue;
    const BlockSpec& s = block_spec(b.type);
    if (!s.has(BlockTag::NonStable) || s.has(BlockTag::NoConnect)) continue;
    const int a = body_of[static_cast<std::size_t>(b.attach.parent)];
    const int bb = body_of[static_cast<std::size_t>(b.id)];
    const Vec3 center = b.world_box->center + w.spawn_offset;
    const Vec3 base = b.position + w.spawn_offset;
    if (b.type == kGrabberType) {
      add_weld(a, bb, base, b.id);
      continue;
    }
    Joint j;
    j.a = a;
    j.b = bb;
    j.block = b.id;
    j.break_force = scenario.break_threshold * std::min(body_mass(a), body_mass(bb));
    Vec3 anchor = center;
    if (b.type == kBallJointType || b.type == kAxleConnectorType) {
      j.kind = JointKind::Spherical;
      anchor = base;
    } else if (is_caster(b.type)) {
      j.kind = JointKind::Spherical;
    } else {
      j.kind = JointKind::Revolute;
      const FaceLabel axis_label = s.rotation_axis.value_or(FaceLabel::Front);
      const Vec3 axis = b.rotation * local_vector(axis_label);
      j.axis_a = axis;
      j.axis_b = axis;
      if (s.has(BlockTag::PoweredWheel)) {
        const Direction facing = transform_direction(b.orientation, axis_label);
        if (const auto push = wheel_push(facing)) {
          const double sigma = axis.cross(Vec3::UnitY()).dot(*push) >= 0 ? 1.0 : -1.0;
          j.motor = MotorKind::Wheel;
          j.motor_speed = sigma * (b.type == kLargePoweredWheelType ? scenario.large_wheel_speed : scenario.wheel_speed);
          j.motor_torque = scenario.wheel_torque;
          j.brake_before_power = true;
        }
      } else if (b.type == kRotatingType) {
        j.motor = MotorKind::Rotating;
        j.motor_speed = scenario.rotating_speed;
        j.motor_torque = scenario.rotating_torque;
        j.brake_before_power = true;
      } else if (b.type == kSteeringHingeType || b.type == kSteeringBlockType) {
        j.motor = MotorKind::Hold;
        j.motor_torque = scenario.steering_torque;
        j.brake_before_power = true;
      }
    }
    j.anchor_a = anchor - w.bodies[static_cast<std::size_t>(a)].x;
    j.anchor_b = anchor - w.bodies[static_cast<std::size_t>(bb)].x;
    w.joints.push_back(j);
  }

  // Coinciding faces on different bodies and braces become breakable welds.
  for (const auto& [lo, hi] : machine.auto_connections) {
    const int a = body_of[static_cast<std::size_t>(lo)];
    const int bb = body_of[static_cast<std::size_t>(hi)];
    if (a == bb) continue;
    const Vec3 mid = 0.5 * (blocks[static_cast<std::size_t>(lo)].world_box->center +
                            blocks[static_cast<std::size_t>(hi)].world_box->center) +
                     w.spawn_offset;
    add_weld(a, bb, mid, hi);
  }
  for (const ResolvedBlock& b : blocks) {
    if (!b.attach_b) continue;
    const int a = body_of[static_cast<std::size_t>(b.attach.parent)];
    const int bb = body_of[static_cast<std::size_t>(b.attach_b->parent)];
    if (b.type == kSpringType) {
      SpringLink sp;
      sp.block = b.id;
      sp.a = a;
      sp.b = bb;
      sp.anchor_a = w.blocks[static_cast<std::size_t>(b.id)].anchor_a;
      sp.anchor_b = w.blocks[static_cast<std::size_t>(b.id)].anchor_b;
      sp.stiffness = scenario.spring_stiffness;
      sp.rest_length = scenario.spring_rest_length;
      if (a != bb) w.springs.push_back(sp);
    } else if (a != bb) {
      add_weld(a, bb, 0.5 * (b.endpoints->first + b.endpoints->second) + w.spawn_offset, b.id);
    }
  }

  if (scenario.walls) {
    const double e = scenario.walls->half_extent;
    const double t = scenario.walls->thickness;
    const double h = scenario.walls->height;
    const double o = e + t;
    w.walls = {
        {Vec3(-o, 0, e), Vec3(o, h, o)},
        {Vec3(-o, 0, -o), Vec3(o, h, -e)},
        {Vec3(e, 0, -e), Vec3(o, h, e)},
        {Vec3(-o, 0, -e), Vec3(-e, h, e)},
    };
  }
  return w;
}

bool springs_active(const World& world) { return world.time >= world.scenario.power_on_time - 1e-9; }

BlockState block_state(const World& world, int block) {
  const BlockBinding& bind = world.blocks.at(static_cast<std::size_t>(block));
  const RigidBody& a = world.bodies[static_cast<std::size_t>(bind.body)];
  BlockState s;
  if (bind.linear) {
    const RigidBody& b = world.bodies[static_cast<std::size_t>(bind.body_b)];
    const Vec3 pa = a.to_world(bind.anchor_a);
    const Vec3 pb = b.to_world(bind.anchor_b);
    s.position = 0.5 * (pa + pb);
    s.rotation = canonical(b.q * bind.rotation);
    s.velocity = 0.5 * (a.point_velocity(pa) + b.point_velocity(pb));
    s.length = (pa - pb).norm();
    return s;
  }
  s.position = a.to_world(bind.center);
  s.rotation = canonical(a.q * bind.rotation);
  s.velocity = a.point_velocity(s.position);
  return s;
}

double mechanical_energy(const World& world) {
  double e = 0.0;
  for (const RigidBody& b : world.bodies) {
    const Mat3 r = b.q.toRotationMatrix();
    const Mat3 inertia = r * b.inertia * r.transpose();
    e += 0.5 * b.mass * b.v.squaredNorm() + 0.5 * b.w.dot(inertia * b.w) + b.mass * world.scenario.gravity * b.x.y();
  }
  if (springs_active(world)) {
    for (const SpringLink& sp : world.springs) {
      const Vec3 pa = world.bodies[static_cast<std::size_t>(sp.a)].to_world(sp.anchor_a);
      const Vec3 pb = world.bodies[static_cast<std::size_t>(sp.b)].to_world(sp.anchor_b);
      const double ext = (pa - pb).norm() - sp.rest_length;
      e += 0.5 * sp.stiffness * ext * ext;
    }
  }
  return e;
}

}  // namespace mechforge
