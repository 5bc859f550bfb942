// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mechforge/physics.hpp"

namespace mechforge {
namespace {

double clean_time(double t) { return std::round(t * 1e9) / 1e9; }

TraceSample capture(const World& w) {
  TraceSample s;
  s.time = w.time;
  s.blocks.reserve(w.blocks.size());
  for (std::size_t i = 0; i < w.blocks.size(); ++i) s.blocks.push_back(block_state(w, static_cast<int>(i)));
  s.energy = mechanical_energy(w);
  return s;
}

Json vec(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 read_vec(const Json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

}  // namespace

std::vector<std::pair<double, Quat>> SimTrace::root_orientation_per_second() const {
  std::vector<std::pair<double, Quat>> out;
  for (const TraceSample& s : samples) {
    const double whole = std::round(s.time);
    if (whole >= 1.0 && std::abs(s.time - whole) < 1e-6 && !s.blocks.empty()) {
      out.emplace_back(whole, s.blocks[0].rotation);
    }
  }
  return out;
}

SimTrace simulate(const ResolvedMachine& machine, const Scenario& scenario) {
  World world = build_world(machine, scenario);
  SimTrace trace;
  trace.sample_interval = scenario.sample_interval;
  trace.duration = scenario.duration;
  for (const ResolvedBlock& b : machine.blocks) trace.block_types.push_back(b.type);
  trace.initial = capture(world);
  const int per_sample = scenario.ticks_per_sample();
  const int samples = scenario.sample_count();
  for (int k = 1; k <= samples && !world.non_finite; ++k) {
    for (int t = 0; t < per_sample; ++t) {
      step(world, scenario.timestep);
      if (world.non_finite) break;
    }
    if (world.non_finite) break;
    // Snap accumulated time to the exact tick count.
    world.time = static_cast<double>(world.tick) * scenario.timestep;
    trace.samples.push_back(capture(world));
    trace.samples.back().time = clean_time(k * scenario.sample_interval);
  }
  trace.events = world.events;
  for (BreakEvent& e : trace.events) e.time = clean_time(e.time);
  trace.truncated = world.non_finite;
  return trace;
}

SimTrace simulate(const ConstructionTree& tree, const Scenario& scenario) { return simulate(resolve(tree), scenario); }

Json trace_to_json(const SimTrace& trace) {
  Json out;
  out["duration"] = trace.duration;
  out["sample_interval"] = trace.sample_interval;
  out["truncated"] = trace.truncated;
  out["block_types"] = trace.block_types;
  auto sample_json = [&](const TraceSample& s) {
    Json blocks = Json::array();
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
      const BlockState& b = s.blocks[i];
      Json r;
      r["id"] = static_cast<int>(i);
      r["type"] = trace.block_types.at(i);
      r["position"] = vec(b.position);
      r["rotation"] = Json::array({b.rotation.x(), b.rotation.y(), b.rotation.z(), b.rotation.w()});
      r["velocity"] = vec(b.velocity);
      if (b.length) r["length"] = *b.length;
      blocks.push_back(std::move(r));
    }
    Json j;
    j["time"] = s.time;
    j["energy"] = s.energy;
    j["blocks"] = std::move(blocks);
    return j;
  };
  out["initial"] = sample_json(trace.initial);
  Json samples = Json::array();
  for (const TraceSample& s : trace.samples) samples.push_back(sample_json(s));
  out["samples"] = std::move(samples);
  Json events = Json::array();
  for (const BreakEvent& e : trace.events) {
    events.push_back({{"event", "BrokeJoint"}, {"block", e.block}, {"time", e.time}});
  }
  out["events"] = std::move(events);
  Json roots = Json::array();
  for (const auto& [t, q] : trace.root_orientation_per_second()) {
    roots.push_back({{"time", t}, {"rotation", Json::array({q.x(), q.y(), q.z(), q.w()})}});
  }
  out["root_orientation_per_second"] = std::move(roots);
  return out;
}

SimTrace trace_from_json(const Json& doc) {
  SimTrace t;
  t.duration = doc.at("duration").get<double>();
  t.sample_interval = doc.at("sample_interval").get<double>();
  t.truncated = doc.at("truncated").get<bool>();
  t.block_types = doc.at("block_types").get<std::vector<int>>();
  auto read_sample = [](const Json& j) {
    TraceSample s;
    s.time = j.at("time").get<double>();
    s.energy = j.at("energy").get<double>();
    for (const Json& r : j.at("blocks")) {
      BlockState b;
      b.position = read_vec(r.at("position"));
      const Json& q = r.at("rotation");
      b.rotation = Quat(q.at(3).get<double>(), q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>());
      b.velocity = read_vec(r.at("velocity"));
      if (r.contains("length")) b.length = r.at("length").get<double>();
      s.blocks.push_back(b);
    }
    return s;
  };
  t.initial = read_sample(doc.at("initial"));
  for (const Json& s : doc.at("samples")) t.samples.push_back(read_sample(s));
  for (const Json& e : doc.at("events")) t.events.push_back({e.at("block").get<int>(), e.at("time").get<double>()});
  return t;
}

std::string trace_to_jsonl(const SimTrace& trace) {
  const Json doc = trace_to_json(trace);
  std::ostringstream o;
  Json header;
  header["kind"] = "header";
  for (const char* key : {"duration", "sample_interval", "truncated", "block_types"}) header[key] = doc[key];
  o << header.dump() << '\n';
  auto line = [&](const char* kind, const Json& body) {
    Json j;
    j["kind"] = kind;
    for (const auto& [k, v] : body.items()) j[k] = v;
    o << j.dump() << '\n';
  };
  line("initial", doc["initial"]);
  for (const Json& s : doc["samples"]) line("sample", s);
  for (const Json& e : doc["events"]) line("event", e);
  return o.str();
}

SimTrace trace_from_jsonl(std::string_view text) {
  Json doc;
  doc["samples"] = Json::array();
  doc["events"] = Json::array();
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  try {
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      Json j = Json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      j.erase("kind");
      if (kind == "header") {
        for (const auto& [k, v] : j.items()) doc[k] = v;
      } else if (kind == "initial") {
        doc["initial"] = std::move(j);
      } else if (kind == "sample") {
        doc["samples"].push_back(std::move(j));
      } else if (kind == "event") {
        doc["events"].push_back(std::move(j));
      } else {
        throw std::invalid_argument("unknown record kind " + kind);
      }
    }
    return trace_from_json(doc);
  } catch (const Json::exception& e) {
    throw std::invalid_argument("trace line " + std::to_string(n) + ": " + e.what());
  }
}

}  // namespace mechforge
