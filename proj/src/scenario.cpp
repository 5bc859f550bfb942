// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace mechforge {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  int line;
  std::string key;
  std::string value;
};

double to_double(const Entry& e) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used == e.value.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ScenarioError(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
}

int to_int(const Entry& e) {
  const double v = to_double(e);
  if (v != std::floor(v) || v < 1 || v > 1e6) throw ScenarioError(e.line, "'" + e.key + "' expects a positive integer");
  return static_cast<int>(v);
}

bool to_bool(const Entry& e) {
  if (e.value == "true" || e.value == "on" || e.value == "1") return true;
  if (e.value == "false" || e.value == "off" || e.value == "0") return false;
  throw ScenarioError(e.line, "'" + e.key + "' expects true or false");
}

int ratio(double a, double b) { return static_cast<int>(std::lround(a / b)); }

}  // namespace

std::string_view to_string(TaskKind t) { return t == TaskKind::Car ? "car" : "catapult"; }

Scenario Scenario::car() { return Scenario{}; }

Scenario Scenario::catapult() {
  Scenario s;
  s.task = TaskKind::Catapult;
  s.walls = WallSpec{};
  return s;
}

int Scenario::ticks() const { return ratio(duration, timestep); }
int Scenario::ticks_per_sample() const { return ratio(sample_interval, timestep); }
int Scenario::sample_count() const { return ratio(duration, sample_interval); }

ScenarioError::ScenarioError(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

Scenario parse_scenario(std::string_view text) {
  std::vector<Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ScenarioError(no, "expected 'key = value'");
    Entry e{no, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
    if (e.key.empty() || e.value.empty()) throw ScenarioError(no, "expected 'key = value'");
    entries.push_back(std::move(e));
  }

  Scenario s;
  for (const Entry& e : entries) {
    if (e.key != "task") continue;
    if (e.value == "car") {
      s = Scenario::car();
    } else if (e.value == "catapult") {
      s = Scenario::catapult();
    } else {
      throw ScenarioError(e.line, "unknown task '" + e.value + "'");
    }
  }

  auto wall = [&s]() -> WallSpec& {
    if (!s.walls) s.walls = WallSpec{};
    return *s.walls;
  };
  const std::map<std::string, std::function<void(const Entry&)>> setters = {
      {"task", [](const Entry&) {}},
      {"target",
       [&](const Entry& e) {
         const auto d = parse_direction(e.value);
         if (!d || *d == Direction::YPos || *d == Direction::YNeg) throw ScenarioError(e.line, "target must be x+, x-, z+ or z-");
         s.target = *d;
       }},
      {"duration", [&](const Entry& e) { s.duration = to_double(e); }},
      {"sample_interval", [&](const Entry& e) { s.sample_interval = to_double(e); }},
      {"timestep", [&](const Entry& e) { s.timestep = to_double(e); }},
      {"power_on_time", [&](const Entry& e) { s.power_on_time = to_double(e); }},
      {"gravity", [&](const Entry& e) { s.gravity = to_double(e); }},
      {"spawn_height", [&](const Entry& e) { s.spawn_height = to_double(e); }},
      {"walls",
       [&](const Entry& e) {
         if (to_bool(e)) {
           wall();
         } else {
           s.walls.reset();
         }
       }},
      {"wall_height", [&](const Entry& e) { wall().height = to_double(e); }},
      {"wall_half_extent", [&](const Entry& e) { wall().half_extent = to_double(e); }},
      {"wall_thickness", [&](const Entry& e) { wall().thickness = to_double(e); }},
      {"break_threshold", [&](const Entry& e) { s.break_threshold = to_double(e); }},
      {"spring_stiffness", [&](const Entry& e) { s.spring_stiffness = to_double(e); }},
      {"spring_rest_length", [&](const Entry& e) { s.spring_rest_length = to_double(e); }},
      {"friction", [&](const Entry& e) { s.friction = to_double(e); }},
      {"grip_friction", [&](const Entry& e) { s.grip_friction = to_double(e); }},
      {"elastic_restitution", [&](const Entry& e) { s.elastic_restitution = to_double(e); }},
      {"wheel_speed", [&](const Entry& e) { s.wheel_speed = to_double(e); }},
      {"large_wheel_speed", [&](const Entry& e) { s.large_wheel_speed = to_double(e); }},
      {"wheel_torque", [&](const Entry& e) { s.wheel_torque = to_double(e); }},
      {"rotating_speed", [&](const Entry& e) { s.rotating_speed = to_double(e); }},
      {"rotating_torque", [&](const Entry& e) { s.rotating_torque = to_double(e); }},
      {"steering_torque", [&](const Entry& e) { s.steering_torque = to_double(e); }},
      {"solver_iterations", [&](const Entry& e) { s.solver_iterations = to_int(e); }},
      {"position_iterations", [&](const Entry& e) { s.position_iterations = to_int(e); }},
      {"car_scoring",
       [&](const Entry& e) {
         if (e.value == "projected") {
           s.car_scoring = CarScoring::Projected;
         } else if (e.value == "euclidean-final") {
           s.car_scoring = CarScoring::EuclideanFinal;
         } else {
           throw ScenarioError(e.line, "car_scoring must be projected or euclidean-final");
         }
       }},
      {"catapult_scoring",
       [&](const Entry& e) {
         if (e.value == "height-x-distance") {
           s.catapult_scoring = CatapultScoring::HeightTimesDistance;
         } else if (e.value == "distance") {
           s.catapult_scoring = CatapultScoring::Distance;
         } else {
           throw ScenarioError(e.line, "catapult_scoring must be height-x-distance or distance");
         }
       }},
  };
  for (const Entry& e : entries) {
    const auto it = setters.find(e.key);
    if (it == setters.end()) throw ScenarioError(e.line, "unknown key '" + e.key + "'");
    it->second(e);
  }

  if (s.timestep <= 0 || s.sample_interval <= 0 || s.duration <= 0) {
    throw ScenarioError(0, "duration, sample_interval and timestep must be positive");
  }
  if (std::abs(s.ticks_per_sample() * s.timestep - s.sample_interval) > 1e-9 ||
      std::abs(s.sample_count() * s.sample_interval - s.duration) > 1e-9) {
    throw ScenarioError(0, "duration must be a multiple of sample_interval, which must be a multiple of timestep");
  }
  if (s.gravity < 0 || s.spawn_height < 0 || s.break_threshold <= 0) {
    throw ScenarioError(0, "gravity and spawn_height must be non-negative, break_threshold positive");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(0, "cannot read scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string format_scenario(const Scenario& s) {
  std::ostringstream o;
  o.precision(17);
  o << "task = " << to_string(s.task) << "\n";
  o << "target = " << to_string(s.target) << "\n";
  o << "duration = " << s.duration << "\n";
  o << "sample_interval = " << s.sample_interval << "\n";
  o << "timestep = " << s.timestep << "\n";
  o << "power_on_time = " << s.power_on_time << "\n";
  o << "gravity = " << s.gravity << "\n";
  o << "spawn_height = " << s.spawn_height << "\n";
  o << "walls = " << (s.walls ? "true" : "false") << "\n";
  if (s.walls) {
    o << "wall_height = " << s.walls->height << "\n";
    o << "wall_half_extent = " << s.walls->half_extent << "\n";
    o << "wall_thickness = " << s.walls->thickness << "\n";
  }
  o << "break_threshold = " << s.break_threshold << "\n";
  o << "spring_stiffness = " << s.spring_stiffness << "\n";
  o << "spring_rest_length = " << s.spring_rest_length << "\n";
  o << "friction = " << s.friction << "\n";
  o << "grip_friction = " << s.grip_friction << "\n";
  o << "elastic_restitution = " << s.elastic_restitution << "\n";
  o << "wheel_speed = " << s.wheel_speed << "\n";
  o << "large_wheel_speed = " << s.large_wheel_speed << "\n";
  o << "wheel_torque = " << s.wheel_torque << "\n";
  o << "rotating_speed = " << s.rotating_speed << "\n";
  o << "rotating_torque = " << s.rotating_torque << "\n";
  o << "steering_torque = " << s.steering_torque << "\n";
  o << "solver_iterations = " << s.solver_iterations << "\n";
  o << "position_iterations = " << s.position_iterations << "\n";
  o << "car_scoring = " << (s.car_scoring == CarScoring::Projected ? "projected" : "euclidean-final") << "\n";
  o << "catapult_scoring = "
    << (s.catapult_scoring == CatapultScoring::HeightTimesDistance ? "height-x-distance" : "distance") << "\n";
  return o.str();
}

}  // namespace mechforge
