// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Task scenario parameters and the flat `key = value` config format.
#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mechforge/catalog.hpp"

namespace mechforge {

enum class TaskKind { Car, Catapult };
enum class CarScoring { Projected, EuclideanFinal };
enum class CatapultScoring { HeightTimesDistance, Distance };

std::string_view to_string(TaskKind t);

struct WallSpec {
  double height = 5.0;
  double half_extent = 10.0;  // distance from spawn to the inner wall face
  double thickness = 1.0;
};

struct Scenario {
  TaskKind task = TaskKind::Car;
  Direction target = Direction::ZPos;
  double duration = 5.0;
  double sample_interval = 0.2;
  double timestep = 0.005;
  double power_on_time = 1.0;
  double gravity = 9.81;
  double spawn_height = 0.0;  // gap between the lowest block and the ground at t = 0
  std::optional<WallSpec> walls;

  // Joint breaks when its constraint force exceeds this times the lighter member's mass.
  double break_threshold = 250.0;
  double spring_stiffness = 80.0;
  double spring_rest_length = 0.0;

  double friction = 0.8;
  double grip_friction = 2.0;
  double elastic_restitution = 0.8;

  double wheel_speed = 10.0;
  double large_wheel_speed = 5.0;
  double wheel_torque = 40.0;
  double rotating_speed = 5.0;
  double rotating_torque = 400.0;
  double steering_torque = 100.0;

  int solver_iterations = 20;
  int position_iterations = 8;

  CarScoring car_scoring = CarScoring::Projected;
  CatapultScoring catapult_scoring = CatapultScoring::HeightTimesDistance;

  static Scenario car();
  static Scenario catapult();

  int ticks() const;            // duration / timestep
  int ticks_per_sample() const;  // sample_interval / timestep
  int sample_count() const;      // duration / sample_interval
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

// `key = value` lines, `#` starts a comment. `task` selects the defaults the
// remaining keys override, wherever it appears.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
std::string format_scenario(const Scenario& s);

}  // namespace mechforge
