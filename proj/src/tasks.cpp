// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace mechforge {
namespace {

// Two decimals with trailing zeros dropped: 0.4, 5.63, 7.3.
std::string short_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string vec_text(const Vec3& v) {
  return "[" + short_number(v.x()) + ", " + short_number(v.y()) + ", " + short_number(v.z()) + "]";
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json quat_json(const Quat& q) { return Json::array({q.x(), q.y(), q.z(), q.w()}); }

double projected_max(const SimTrace& trace, int block, Direction target) {
  const Vec3 dir = unit_vector(target);
  const Vec3 start = trace.initial.blocks.at(static_cast<std::size_t>(block)).position;
  double best = 0.0;
  for (const TraceSample& s : trace.samples) {
    best = std::max(best, (s.blocks.at(static_cast<std::size_t>(block)).position - start).dot(dir));
  }
  return best;
}

constexpr double kTimeEps = 1e-9;

}  // namespace

int find_boulder(std::span<const int> block_types) {
  for (int i = static_cast<int>(block_types.size()) - 1; i >= 0; --i) {
    if (block_types[static_cast<std::size_t>(i)] == kBoulderType) return i;
  }
  return -1;
}

double car_performance(const SimTrace& trace, Direction target, CarScoring mode) {
  if (trace.initial.blocks.empty()) return 0.0;
  if (mode == CarScoring::EuclideanFinal) {
    if (trace.samples.empty()) return 0.0;
    return (trace.samples.back().blocks[0].position - trace.initial.blocks[0].position).norm();
  }
  return projected_max(trace, 0, target);
}

CatapultPerformance catapult_performance(const SimTrace& trace, Direction target) {
  if (find_boulder(trace.block_types) < 0) throw NoBoulderError();
  // Machines with several boulders are scored on the best one.
  CatapultPerformance best;
  bool first = true;
  for (std::size_t b = 0; b < trace.block_types.size(); ++b) {
    if (trace.block_types[b] != kBoulderType) continue;
    CatapultPerformance p;
    for (const TraceSample& s : trace.samples) p.max_height = std::max(p.max_height, s.blocks.at(b).position.y());
    p.max_distance = projected_max(trace, static_cast<int>(b), target);
    p.product = p.max_height * p.max_distance;
    if (first || p.product > best.product) best = p;
    first = false;
  }
  return best;
}

Reward car_reward(bool machine_valid, double performance) {
  Reward r;
  r.is_valid = machine_valid;
  r.performance = std::max(0.0, performance);
  r.R = r.is_valid ? r.performance : 0.0;
  return r;
}

Reward catapult_reward(bool machine_valid, const CatapultPerformance& p, CatapultScoring mode) {
  Reward r;
  r.is_valid = machine_valid && p.max_height > kMinBoulderHeight;
  r.performance = std::max(0.0, mode == CatapultScoring::HeightTimesDistance ? p.max_height * p.max_distance
                                                                             : p.max_distance);
  r.R = r.is_valid ? r.performance : 0.0;
  return r;
}

Reward reward(const ValidityReport& validity, const SimTrace* trace, const Scenario& scenario) {
  if (!validity.overall || trace == nullptr || trace->truncated) return Reward{};
  if (scenario.task == TaskKind::Car) {
    return car_reward(true, car_performance(*trace, scenario.target, scenario.car_scoring));
  }
  if (find_boulder(trace->block_types) < 0) return Reward{};
  return catapult_reward(true, catapult_performance(*trace, scenario.target), scenario.catapult_scoring);
}

// ---------------------------------------------------------------- feedback

std::string feedback_block_name(int type_id) {
  if (type_id == 1) return "DoubleWoodenBlock";
  const BlockSpec* s = find_block(type_id);
  if (s == nullptr) return "Block" + std::to_string(type_id);
  std::string out;
  bool up = true;
  for (char c : s->name) {
    if (c == ' ') {
      up = true;
      continue;
    }
    out += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    up = false;
  }
  return out;
}

FeedbackBundle extract_feedback(const SimTrace& trace, const Scenario& scenario) {
  FeedbackBundle f;
  f.task = scenario.task;
  f.truncated = trace.truncated;
  for (const BreakEvent& e : trace.events) {
    f.breaks.push_back({e.block, trace.block_types.at(static_cast<std::size_t>(e.block)), e.time});
  }
  if (scenario.task == TaskKind::Car) {
    f.orientation = trace.root_orientation_per_second();
    f.max_distance = car_performance(trace, scenario.target, CarScoring::Projected);
    std::vector<double> speeds;
    for (const TraceSample& s : trace.samples) {
      f.positions.push_back(s.blocks[0].position);
      speeds.push_back(s.blocks[0].velocity.norm());
      f.max_speed = std::max(f.max_speed, speeds.back());
    }
    const int per_second = std::max(1, static_cast<int>(std::lround(1.0 / trace.sample_interval)));
    for (std::size_t i = 0; i + static_cast<std::size_t>(per_second) <= speeds.size(); i += static_cast<std::size_t>(per_second)) {
      const double sum = std::accumulate(speeds.begin() + static_cast<long>(i),
                                         speeds.begin() + static_cast<long>(i) + per_second, 0.0);
      f.average_speed_per_second.push_back(sum / per_second);
    }
    return f;
  }
  f.boulder = find_boulder(trace.block_types);
  if (f.boulder < 0) return f;
  const CatapultPerformance p = catapult_performance(trace, scenario.target);
  f.boulder_max_distance = p.max_distance;
  f.boulder_max_height = p.max_height;
  for (std::size_t b = 0; b < trace.block_types.size(); ++b) {
    if (trace.block_types[b] != kBoulderType) continue;
    const auto bi = static_cast<int>(b);
    double h = 0.0;
    for (const TraceSample& s : trace.samples) h = std::max(h, s.blocks[b].position.y());
    if (h == p.max_height && projected_max(trace, bi, scenario.target) == p.max_distance) f.boulder = bi;
  }
  for (const TraceSample& s : trace.samples) f.positions.push_back(s.blocks[static_cast<std::size_t>(f.boulder)].position);
  return f;
}

Json feedback_to_json(const FeedbackBundle& f) {
  Json j;
  j["task"] = std::string(to_string(f.task));
  if (f.truncated) j["truncated"] = true;
  Json damaged = Json::array();
  for (const BreakRecord& b : f.breaks) {
    damaged.push_back({{"block", feedback_block_name(b.type)}, {"order_id", b.block}, {"time", b.time}});
  }
  j["machine damaged"] = std::move(damaged);
  Json positions = Json::array();
  for (const Vec3& p : f.positions) positions.push_back(vec_json(p));
  if (f.task == TaskKind::Car) {
    Json orient = Json::array();
    for (const auto& [t, q] : f.orientation) orient.push_back({{"time", t}, {"rotation", quat_json(q)}});
    j["machine orientation"] = std::move(orient);
    j["machine max moving distance"] = f.max_distance;
    j["machine max speed"] = f.max_speed;
    j["machine average speed per second"] = f.average_speed_per_second;
    j["machine position per 0.2 second"] = std::move(positions);
  } else {
    if (f.boulder < 0) {
      j["boulder"] = nullptr;
      return j;
    }
    j["boulder throwing distance"] = f.boulder_max_distance;
    j["boulder max height"] = f.boulder_max_height;
    j["boulder actual position in first 5 seconds"] = std::move(positions);
  }
  return j;
}

std::string format_feedback(const FeedbackBundle& f) {
  std::ostringstream o;
  if (!f.breaks.empty()) {
    o << "machine damaged:\n    machine parts\n";
    for (const BreakRecord& b : f.breaks) {
      o << "        " << feedback_block_name(b.type) << " order_id:" << b.block << " occurred at "
        << short_number(b.time) << " sec\n";
    }
  }
  if (f.truncated) o << "simulation diverged; data after the last sample is missing\n";
  auto list = [&](const std::vector<Vec3>& ps) {
    for (std::size_t i = 0; i < ps.size(); ++i) o << (i ? ", " : "") << vec_text(ps[i]);
    o << "\n";
  };
  if (f.task == TaskKind::Car) {
    o << "machine orientation per second\n";
    for (std::size_t i = 0; i < f.orientation.size(); ++i) {
      const Quat& q = f.orientation[i].second;
      o << (i ? ", " : "") << "[" << short_number(q.x()) << ", " << short_number(q.y()) << ", " << short_number(q.z())
        << ", " << short_number(q.w()) << "]";
    }
    o << "\n";
    o << "machine max moving distance " << short_number(f.max_distance) << "\n";
    o << "machine max speed " << short_number(f.max_speed) << "\n";
    o << "machine average speed per second\n";
    for (std::size_t i = 0; i < f.average_speed_per_second.size(); ++i) {
      o << (i ? ", " : "") << short_number(f.average_speed_per_second[i]);
    }
    o << "\n";
    o << "machine position per 0.2 second\n";
    list(f.positions);
  } else if (f.boulder < 0) {
    o << "no boulder in machine\n";
  } else {
    o << "boulder throwing distance " << short_number(f.boulder_max_distance) << "\n";
    o << "boulder max height " << short_number(f.boulder_max_height) << "\n";
    o << "boulder actual position in first 5 seconds\n";
    list(f.positions);
  }
  return o.str();
}

// ------------------------------------------------------------------ queries

std::string_view to_string(QueryProperty p) {
  switch (p) {
    case QueryProperty::Position: return "position";
    case QueryProperty::Rotation: return "rotation";
    case QueryProperty::Velocity: return "velocity";
    case QueryProperty::Length: return "length";
  }
  return "?";
}

std::string_view to_string(QueryErrorKind k) {
  switch (k) {
    case QueryErrorKind::UnknownBlock: return "UnknownBlock";
    case QueryErrorKind::BadWindow: return "BadWindow";
    case QueryErrorKind::LengthOnNonLinear: return "LengthOnNonLinear";
  }
  return "?";
}

std::vector<QueryEntry> parse_query_json(const Json& doc) {
  if (!doc.is_array()) throw QueryFormatError("feedback request must be a JSON array");
  std::vector<QueryEntry> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const Json& e = doc[i];
    const std::string where = "entry " + std::to_string(i) + ": ";
    if (!e.is_object()) throw QueryFormatError(where + "not an object");
    if (!e.contains("id") || !e["id"].is_number_integer()) throw QueryFormatError(where + "\"id\" must be an integer");
    if (!e.contains("duration") || !e["duration"].is_array() || e["duration"].size() != 2 ||
        !e["duration"][0].is_number() || !e["duration"][1].is_number()) {
      throw QueryFormatError(where + "\"duration\" must be [t0, t1]");
    }
    QueryEntry q;
    q.id = e["id"].get<int>();
    q.t0 = e["duration"][0].get<double>();
    q.t1 = e["duration"][1].get<double>();
    if (e.contains("properties")) {
      if (!e["properties"].is_array()) throw QueryFormatError(where + "\"properties\" must be an array");
      for (const Json& p : e["properties"]) {
        const std::string name = p.is_string() ? p.get<std::string>() : "";
        bool found = false;
        for (QueryProperty k : {QueryProperty::Position, QueryProperty::Rotation, QueryProperty::Velocity,
                                QueryProperty::Length}) {
          if (to_string(k) == name) {
            q.properties.push_back(k);
            found = true;
          }
        }
        if (!found) throw QueryFormatError(where + "unknown property " + p.dump());
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QueryEntry> parse_query(std::string_view text) {
  constexpr std::string_view open = "<Required Feedback>";
  constexpr std::string_view close = "</Required Feedback>";
  if (const auto b = text.find(open); b != std::string_view::npos) {
    const auto start = b + open.size();
    const auto e = text.find(close, start);
    text = text.substr(start, e == std::string_view::npos ? std::string_view::npos : e - start);
  }
  Json doc;
  try {
    // Trailing commas appear in hand-written requests; the parser rejects them.
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw QueryFormatError(std::string("feedback request is not valid JSON: ") + e.what());
  }
  return parse_query_json(doc);
}

std::vector<QueryResult> query_feedback(const SimTrace& trace, const std::vector<QueryEntry>& query) {
  std::vector<QueryResult> out;
  for (const QueryEntry& q : query) {
    QueryResult r;
    r.entry = q;
    if (q.id < 0 || q.id >= static_cast<int>(trace.block_types.size())) {
      r.error = QueryErrorKind::UnknownBlock;
      out.push_back(std::move(r));
      continue;
    }
    r.type = trace.block_types[static_cast<std::size_t>(q.id)];
    if (q.t0 < -kTimeEps || q.t1 > trace.duration + kTimeEps || q.t0 > q.t1) {
      r.error = QueryErrorKind::BadWindow;
      out.push_back(std::move(r));
      continue;
    }
    const bool linear = block_spec(r.type).is_linear();
    if (!linear && std::find(q.properties.begin(), q.properties.end(), QueryProperty::Length) != q.properties.end()) {
      r.error = QueryErrorKind::LengthOnNonLinear;
      out.push_back(std::move(r));
      continue;
    }
    double cutoff = q.t1;
    for (const BreakEvent& e : trace.events) {
      if (e.block == q.id && e.time <= q.t1 + kTimeEps) {
        r.broken_at = r.broken_at ? std::min(*r.broken_at, e.time) : e.time;
      }
    }
    if (r.broken_at) cutoff = std::min(cutoff, *r.broken_at);
    for (const TraceSample& s : trace.samples) {
      if (s.time < q.t0 - kTimeEps || s.time > cutoff + kTimeEps) continue;
      const BlockState& b = s.blocks[static_cast<std::size_t>(q.id)];
      r.times.push_back(s.time);
      for (QueryProperty p : q.properties) {
        switch (p) {
          case QueryProperty::Position: r.position.push_back(b.position); break;
          case QueryProperty::Rotation: r.rotation.push_back(b.rotation); break;
          case QueryProperty::Velocity: r.velocity.push_back(b.velocity); break;
          case QueryProperty::Length: r.length.push_back(b.length.value_or(0.0)); break;
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

Json query_results_to_json(const std::vector<QueryResult>& results) {
  Json out = Json::array();
  for (const QueryResult& r : results) {
    Json j;
    j["id"] = r.entry.id;
    if (r.type >= 0) j["type"] = r.type;
    j["duration"] = Json::array({r.entry.t0, r.entry.t1});
    if (r.error) {
      j["error"] = std::string(to_string(*r.error));
      out.push_back(std::move(j));
      continue;
    }
    if (r.broken_at) j["broken_at"] = *r.broken_at;
    j["times"] = r.times;
    for (QueryProperty p : r.entry.properties) {
      Json series = Json::array();
      switch (p) {
        case QueryProperty::Position:
          for (const Vec3& v : r.position) series.push_back(vec_json(v));
          break;
        case QueryProperty::Rotation:
          for (const Quat& q : r.rotation) series.push_back(quat_json(q));
          break;
        case QueryProperty::Velocity:
          for (const Vec3& v : r.velocity) series.push_back(vec_json(v));
          break;
        case QueryProperty::Length:
          for (double v : r.length) series.push_back(v);
          break;
      }
      j[std::string(to_string(p))] = std::move(series);
    }
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------- batches

std::string BatchMetrics::render() const {
  std::ostringstream o;
  o << machine_valid << "/" << total << ", ";
  if (mean) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", *mean);
    o << buf;
  } else {
    o << "n/a";
  }
  return o.str();
}

BatchMetrics batch_metrics(std::span<const RunRecord> runs) {
  if (runs.empty()) throw std::invalid_argument("batch is empty");
  BatchMetrics m;
  m.total = static_cast<int>(runs.size());
  std::vector<double> scores;
  for (const RunRecord& r : runs) {
    m.file_valid += r.file_valid ? 1 : 0;
    m.spatial_valid += (r.file_valid && r.spatial_valid) ? 1 : 0;
    if (r.machine_valid) {
      ++m.machine_valid;
      scores.push_back(r.score);
    }
  }
  m.file_rate = static_cast<double>(m.file_valid) / m.total;
  if (m.file_valid > 0) m.spatial_rate = static_cast<double>(m.spatial_valid) / m.file_valid;
  m.machine_rate = static_cast<double>(m.machine_valid) / m.total;
  if (!scores.empty()) {
    const double n = static_cast<double>(scores.size());
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    m.mean = mean;
    m.max = *std::max_element(scores.begin(), scores.end());
    m.stddev = std::sqrt(var / n);
  }
  return m;
}

Json metrics_to_json(const BatchMetrics& m) {
  auto opt = [](const std::optional<double>& v) -> Json { return v ? Json(*v) : Json(nullptr); };
  Json j;
  j["total"] = m.total;
  j["file_valid"] = m.file_valid;
  j["spatial_valid"] = m.spatial_valid;
  j["machine_valid"] = m.machine_valid;
  j["file_rate"] = m.file_rate;
  j["spatial_rate"] = opt(m.spatial_rate);
  j["machine_rate"] = m.machine_rate;
  j["mean"] = opt(m.mean);
  j["max"] = opt(m.max);
  j["std"] = opt(m.stddev);
  j["summary"] = m.render();
  return j;
}

// -------------------------------------------------------------- evaluation

Evaluation evaluate(const ConstructionTree& tree, const Scenario& scenario) {
  Evaluation e;
  e.validity = machine_validity(tree);
  if (!e.validity.overall) return e;
  e.trace = simulate(tree, scenario);
  e.reward = reward(e.validity, &*e.trace, scenario);
  e.feedback = extract_feedback(*e.trace, scenario);
  return e;
}

}  // namespace mechforge
