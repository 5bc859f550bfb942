// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Rigid-body simulation of a resolved machine: bodies are maximal groups of
// rigidly connected blocks, joined by revolute, spherical and fixed joints.
// Sequential impulses with split position correction, fixed timestep.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mechforge/assembly.hpp"
#include "mechforge/scenario.hpp"

namespace mechforge {

enum class ShapeKind { Box, Sphere, Cylinder };

struct Shape {
  ShapeKind kind = ShapeKind::Box;
  int block = -1;
  Vec3 center = Vec3::Zero();        // body frame
  Mat3 rotation = Mat3::Identity();  // body frame; cylinder axis is column 2
  Vec3 half = Vec3::Zero();          // box half extents; cylinder (r, r, half height)
  double radius = 0.0;               // sphere and cylinder
  double friction = 0.8;
  double restitution = 0.0;
};

struct RigidBody {
  std::vector<int> blocks;
  double mass = 0.0;
  double inv_mass = 0.0;
  Mat3 inertia = Mat3::Identity();      // body frame, about the center of mass
  Mat3 inv_inertia = Mat3::Identity();  // body frame
  Vec3 x = Vec3::Zero();                // center of mass, world
  Quat q = Quat::Identity();            // body frame is the world frame at t = 0
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();
  std::vector<Shape> shapes;

  Mat3 world_inv_inertia() const;
  Vec3 to_world(const Vec3& local) const { return x + q * local; }
  Vec3 point_velocity(const Vec3& world_point) const { return v + w.cross(world_point - x); }
};

enum class JointKind { Fixed, Revolute, Spherical };
enum class MotorKind { None, Wheel, Rotating, Hold };

struct Joint {
  JointKind kind = JointKind::Fixed;
  int a = -1;  // parent-side body
  int b = -1;  // child-side body
  int block = -1;  // reported when the joint breaks
  Vec3 anchor_a = Vec3::Zero();  // body frames
  Vec3 anchor_b = Vec3::Zero();
  Vec3 axis_a = Vec3::UnitZ();   // revolute axis in a's frame
  Vec3 axis_b = Vec3::UnitZ();
  MotorKind motor = MotorKind::None;
  double motor_speed = 0.0;  // target (b - a) angular speed about the axis after power-on
  double motor_torque = 0.0;
  bool brake_before_power = false;
  double break_force = 0.0;
  bool broken = false;
};

struct SpringLink {
  int block = -1;
  bool active_only_after_power = true;
  int a = -1;
  int b = -1;
  Vec3 anchor_a = Vec3::Zero();
  Vec3 anchor_b = Vec3::Zero();
  double stiffness = 0.0;
  double rest_length = 0.0;
};

// Where a block lives: a body plus its pose in that body's frame. Linear blocks
// instead reference one anchor on each endpoint body.
struct BlockBinding {
  int id = -1;
  int type = -1;
  int body = -1;
  Vec3 center = Vec3::Zero();  // body frame
  Quat rotation = Quat::Identity();
  bool linear = false;
  int body_b = -1;
  Vec3 anchor_a = Vec3::Zero();
  Vec3 anchor_b = Vec3::Zero();
};

struct BreakEvent {
  int block = -1;
  double time = 0.0;

  bool operator==(const BreakEvent&) const = default;
};

struct WarmImpulse {
  double n = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
};

struct World {
  Scenario scenario;
  std::vector<RigidBody> bodies;
  std::vector<Joint> joints;
  std::vector<SpringLink> springs;
  std::vector<Aabb> walls;
  std::vector<BlockBinding> blocks;  // indexed by block id
  Vec3 spawn_offset = Vec3::Zero();  // resolved-machine coordinates + offset = world
  double time = 0.0;
  long tick = 0;
  std::vector<BreakEvent> events;
  bool non_finite = false;
  std::map<std::tuple<int, int, int, int>, WarmImpulse> warm;  // contact cache keyed by feature
};

// Pre: the machine is overall valid. Places it with its lowest point
// `scenario.spawn_height` above the ground plane y = 0 and the root over the origin.
World build_world(const ResolvedMachine& machine, const Scenario& scenario);

// Advances one tick of length dt.
void step(World& world, double dt);
inline void step(World& world) { step(world, world.scenario.timestep); }

struct BlockState {
  Vec3 position = Vec3::Zero();  // geometric center
  Quat rotation = Quat::Identity();
  Vec3 velocity = Vec3::Zero();
  std::optional<double> length;  // Linear blocks
};

BlockState block_state(const World& world, int block);
// Kinetic + gravitational potential (ground at y = 0) + active spring energy.
double mechanical_energy(const World& world);
bool springs_active(const World& world);

// ------------------------------------------------------------------- trace

struct TraceSample {
  double time = 0.0;
  std::vector<BlockState> blocks;  // indexed by block id
  double energy = 0.0;
};

struct SimTrace {
  std::vector<int> block_types;  // indexed by block id
  TraceSample initial;           // t = 0
  std::vector<TraceSample> samples;  // t = sample_interval * k, k = 1..n
  std::vector<BreakEvent> events;
  bool truncated = false;  // NonFiniteState: the solver diverged
  double sample_interval = 0.2;
  double duration = 5.0;

  // Root orientation at each whole second covered by the samples.
  std::vector<std::pair<double, Quat>> root_orientation_per_second() const;
};

SimTrace simulate(const ResolvedMachine& machine, const Scenario& scenario);
// Resolves first; throws std::invalid_argument on a structurally invalid tree.
SimTrace simulate(const ConstructionTree& tree, const Scenario& scenario);

Json trace_to_json(const SimTrace& trace);
SimTrace trace_from_json(const Json& doc);
// One JSON object per line: a header, the initial state, each sample, then
// each break event. Throws std::invalid_argument on malformed input.
std::string trace_to_jsonl(const SimTrace& trace);
SimTrace trace_from_jsonl(std::string_view text);

}  // namespace mechforge
