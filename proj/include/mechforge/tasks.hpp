// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Scoring, environment feedback and run statistics for the car and catapult tasks.
#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mechforge/assembly.hpp"
#include "mechforge/physics.hpp"
#include "mechforge/scenario.hpp"

namespace mechforge {

// Catapults must lift the boulder above this height to count.
inline constexpr double kMinBoulderHeight = 3.0;

struct Reward {
  bool is_valid = false;
  double performance = 0.0;
  double R = 0.0;
};

struct CatapultPerformance {
  double max_height = 0.0;
  double max_distance = 0.0;
  double product = 0.0;
};

class NoBoulderError : public std::runtime_error {
 public:
  NoBoulderError() : std::runtime_error("machine has no boulder") {}
};

// Highest-id boulder block, or -1.
int find_boulder(std::span<const int> block_types);

// Max over samples of the root displacement projected on the target, or the
// final straight-line displacement in EuclideanFinal mode. Never negative.
double car_performance(const SimTrace& trace, Direction target, CarScoring mode = CarScoring::Projected);
// Scores the best boulder when there are several. Throws NoBoulderError.
CatapultPerformance catapult_performance(const SimTrace& trace, Direction target);

Reward car_reward(bool machine_valid, double performance);
Reward catapult_reward(bool machine_valid, const CatapultPerformance& p,
                       CatapultScoring mode = CatapultScoring::HeightTimesDistance);
// Car validity is overall machine validity; catapults also need a boulder
// above kMinBoulderHeight. A diverged (truncated) trace is never valid.
Reward reward(const ValidityReport& validity, const SimTrace* trace, const Scenario& scenario);

// ---------------------------------------------------------------- feedback

struct BreakRecord {
  int block = -1;
  int type = -1;
  double time = 0.0;
};

struct FeedbackBundle {
  TaskKind task = TaskKind::Car;
  bool truncated = false;
  std::vector<BreakRecord> breaks;
  // car
  std::vector<std::pair<double, Quat>> orientation;  // root, once per second
  double max_distance = 0.0;
  double max_speed = 0.0;
  std::vector<double> average_speed_per_second;
  // catapult
  int boulder = -1;  // the boulder the numbers below come from
  double boulder_max_distance = 0.0;
  double boulder_max_height = 0.0;
  // root (car) or boulder (catapult) position per sample
  std::vector<Vec3> positions;
};

// Name used in damage reports: the catalog name in CamelCase, with the two-unit
// wooden block reported as DoubleWoodenBlock.
std::string feedback_block_name(int type_id);

FeedbackBundle extract_feedback(const SimTrace& trace, const Scenario& scenario);
Json feedback_to_json(const FeedbackBundle& f);
// Plain-text report in the layout the design agents read.
std::string format_feedback(const FeedbackBundle& f);

// ------------------------------------------------------------------ queries

enum class QueryProperty { Position, Rotation, Velocity, Length };
std::string_view to_string(QueryProperty p);

struct QueryEntry {
  int id = -1;
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<QueryProperty> properties;
};

class QueryFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `[{"id": int, "duration": [t0, t1], "properties": [...]}, ...]`, optionally
// wrapped in <Required Feedback> tags. Throws QueryFormatError.
std::vector<QueryEntry> parse_query(std::string_view text);
std::vector<QueryEntry> parse_query_json(const Json& doc);

enum class QueryErrorKind { UnknownBlock, BadWindow, LengthOnNonLinear };
std::string_view to_string(QueryErrorKind k);

struct QueryResult {
  QueryEntry entry;
  int type = -1;
  std::optional<QueryErrorKind> error;
  std::optional<double> broken_at;  // set when the block broke before the window ended
  std::vector<double> times;
  std::vector<Vec3> position;
  std::vector<Quat> rotation;
  std::vector<Vec3> velocity;
  std::vector<double> length;
};

std::vector<QueryResult> query_feedback(const SimTrace& trace, const std::vector<QueryEntry>& query);
Json query_results_to_json(const std::vector<QueryResult>& results);

// ---------------------------------------------------------------- batches

struct RunRecord {
  bool file_valid = false;
  bool spatial_valid = false;
  bool machine_valid = false;
  double score = 0.0;
};

struct BatchMetrics {
  int total = 0;
  int file_valid = 0;
  int spatial_valid = 0;
  int machine_valid = 0;
  double file_rate = 0.0;
  std::optional<double> spatial_rate;  // over file-valid runs
  double machine_rate = 0.0;
  std::optional<double> mean;  // over machine-valid runs
  std::optional<double> max;
  std::optional<double> stddev;  // population standard deviation

  // "11/50, 0.06"
  std::string render() const;
};

// Throws std::invalid_argument on an empty batch.
BatchMetrics batch_metrics(std::span<const RunRecord> runs);
Json metrics_to_json(const BatchMetrics& m);

// -------------------------------------------------------------- evaluation

struct Evaluation {
  ValidityReport validity;
  std::optional<SimTrace> trace;  // only for overall-valid machines
  Reward reward;
  std::optional<FeedbackBundle> feedback;
};

// Validates, simulates when valid, and scores.
Evaluation evaluate(const ConstructionTree& tree, const Scenario& scenario);

}  // namespace mechforge
