// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mechforge/tasks.hpp"
#include "support.hpp"

using namespace mechforge;
using namespace mechforge::testing;

namespace {

// Trace over `types` where block b sits at path(b, t).
template <class Path>
SimTrace synthetic_trace(std::vector<int> types, Path path, double duration = 5.0, double dt = 0.2) {
  SimTrace tr;
  tr.block_types = std::move(types);
  tr.duration = duration;
  tr.sample_interval = dt;
  auto sample_at = [&](double t) {
    TraceSample s;
    s.time = t;
    for (std::size_t b = 0; b < tr.block_types.size(); ++b) {
      BlockState st;
      st.position = path(static_cast<int>(b), t);
      if (block_spec(tr.block_types[b]).is_linear()) st.length = 1.0 + t;
      s.blocks.push_back(st);
    }
    return s;
  };
  tr.initial = sample_at(0.0);
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int k = 1; k <= n; ++k) tr.samples.push_back(sample_at(dt * k));
  return tr;
}

ValidityReport valid_report() {
  ValidityReport v;
  v.file_valid = v.spatial_valid = v.within_limits = v.overall = true;
  return v;
}

// A boulder that rises to `peak` at t = 1 and drifts `reach` along z by the end.
SimTrace boulder_trace(double peak, double reach) {
  return synthetic_trace({0, 36}, [=](int b, double t) {
    if (b == 0) return Vec3(0, 0.5, 0);
    const double h = 1.0 + (peak - 1.0) * (1.0 - (t - 1.0) * (t - 1.0));
    return Vec3(0, std::max(h, 0.95), reach * t / 5.0);
  });
}

}  // namespace

// ---------------------------------------------------------------- rewards

TEST(Reward, CatapultProductFromFeedbackNumbers) {
  const CatapultPerformance p{7.3, 5.63, 7.3 * 5.63};
  const Reward r = catapult_reward(true, p);
  EXPECT_TRUE(r.is_valid);
  EXPECT_NEAR(r.R, 41.10, 0.01);
  EXPECT_NEAR(catapult_reward(true, p, CatapultScoring::Distance).R, 5.63, 1e-12);
}

TEST(Reward, HeightGate) {
  for (double h : {0.0, 1.5, 2.999, 3.0}) {
    const Reward r = catapult_reward(true, {h, 10.0, h * 10.0});
    EXPECT_FALSE(r.is_valid) << h;
    EXPECT_EQ(r.R, 0.0) << h;
  }
  EXPECT_TRUE(catapult_reward(true, {3.001, 10.0, 30.01}).is_valid);
}

TEST(Reward, SyntheticCatapultTrace) {
  const SimTrace tr = boulder_trace(7.3, 5.63);
  const CatapultPerformance p = catapult_performance(tr, Direction::ZPos);
  EXPECT_NEAR(p.max_height, 7.3, 1e-9);
  EXPECT_NEAR(p.max_distance, 5.63, 1e-9);
  const Reward r = reward(valid_report(), &tr, Scenario::catapult());
  EXPECT_NEAR(r.R, 41.10, 0.01);

  const SimTrace low = boulder_trace(3.0, 20.0);
  EXPECT_EQ(reward(valid_report(), &low, Scenario::catapult()).R, 0.0);
}

TEST(Reward, InvalidMachinesScoreZero) {
  const SimTrace tr = boulder_trace(7.3, 5.63);
  ValidityReport v = valid_report();
  v.spatial_valid = v.overall = false;
  EXPECT_EQ(reward(v, &tr, Scenario::catapult()).R, 0.0);
  EXPECT_EQ(reward(v, &tr, Scenario::car()).R, 0.0);
  EXPECT_EQ(reward(valid_report(), nullptr, Scenario::car()).R, 0.0);
  SimTrace diverged = tr;
  diverged.truncated = true;
  EXPECT_EQ(reward(valid_report(), &diverged, Scenario::catapult()).R, 0.0);
  EXPECT_EQ(car_reward(false, 12.0).R, 0.0);
}

TEST(Reward, InvalidBundledMachinesScoreZero) {
  for (const char* f : {"validity_corpus/collide_large_wheels.json", "validity_corpus/big_six_logs_z.json"}) {
    const Evaluation e = evaluate(load_tree(test_data_path(f)), Scenario::car());
    EXPECT_FALSE(e.validity.overall) << f;
    EXPECT_FALSE(e.trace.has_value()) << f;
    EXPECT_EQ(e.reward.R, 0.0) << f;
  }
}

TEST(Reward, CatapultWithoutBoulder) {
  const SimTrace tr = synthetic_trace({0, 15}, [](int, double) { return Vec3(0, 0.5, 0); });
  EXPECT_THROW(catapult_performance(tr, Direction::ZPos), NoBoulderError);
  EXPECT_EQ(reward(valid_report(), &tr, Scenario::catapult()).R, 0.0);
  EXPECT_EQ(find_boulder(tr.block_types), -1);
  const std::vector<int> two = {0, 36, 15, 36};
  EXPECT_EQ(find_boulder(two), 3);
}

TEST(Reward, BestBoulderCounts) {
  const SimTrace tr = synthetic_trace({0, 36, 36}, [](int b, double t) {
    if (b == 1) return Vec3(0, 1.0 + 6.0 * t / 5.0, 8.0 * t / 5.0);
    return Vec3(0, 1.0, 0.0);
  });
  const CatapultPerformance p = catapult_performance(tr, Direction::ZPos);
  EXPECT_NEAR(p.max_height, 7.0, 1e-9);
  EXPECT_NEAR(p.max_distance, 8.0, 1e-9);
  const FeedbackBundle f = extract_feedback(tr, Scenario::catapult());
  EXPECT_EQ(f.boulder, 1);
}

TEST(Reward, CarPerformanceProperties) {
  // Never negative, and larger forward travel never lowers the score.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> speed(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double v = speed(rng);
    const double extra = std::abs(speed(rng));
    const SimTrace a = synthetic_trace({0}, [=](int, double t) { return Vec3(0.3 * t, 0.5, v * t); });
    const SimTrace b = synthetic_trace({0}, [=](int, double t) { return Vec3(0.3 * t, 0.5, (v + extra) * t); });
    const double pa = car_performance(a, Direction::ZPos);
    const double pb = car_performance(b, Direction::ZPos);
    EXPECT_GE(pa, 0.0);
    EXPECT_GE(pb, pa - 1e-12);
    EXPECT_NEAR(pa, std::max(0.0, v * 5.0), 1e-9);
    EXPECT_GE(car_reward(true, pa).R, 0.0);
  }
  const SimTrace diag = synthetic_trace({0}, [](int, double t) { return Vec3(0.6 * t, 0.5, 0.8 * t); });
  EXPECT_NEAR(car_performance(diag, Direction::ZPos, CarScoring::EuclideanFinal), 5.0, 1e-9);
  EXPECT_NEAR(car_performance(diag, Direction::XPos), 3.0, 1e-9);
}

TEST(Reward, CatapultRewardIsMonotoneInBothFactors) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    const double h = u(rng), d = u(rng), dh = u(rng) * 0.1, dd = u(rng) * 0.1;
    const Reward a = catapult_reward(true, {h, d, h * d});
    const Reward b = catapult_reward(true, {h + dh, d + dd, (h + dh) * (d + dd)});
    EXPECT_GE(a.R, 0.0);
    EXPECT_GE(b.R, a.R);
  }
}

// --------------------------------------------------------------- feedback

TEST(Feedback, BlockNames) {
  EXPECT_EQ(feedback_block_name(1), "DoubleWoodenBlock");
  EXPECT_EQ(feedback_block_name(22), "RotatingBlock");
  EXPECT_EQ(feedback_block_name(63), "Log");
  EXPECT_EQ(feedback_block_name(46), "LargePoweredWheel");
}

TEST(Feedback, DamageReportLayout) {
  SimTrace tr = boulder_trace(7.3, 5.63);
  tr.block_types = {0, 36};
  tr.events = {{1, 2.08}};
  FeedbackBundle f = extract_feedback(tr, Scenario::catapult());
  ASSERT_EQ(f.breaks.size(), 1u);
  f.breaks[0].type = 22;
  f.breaks[0].block = 7;
  const std::string text = format_feedback(f);
  EXPECT_NE(text.find("machine damaged:\n    machine parts\n        RotatingBlock order_id:7 occurred at 2.08 sec\n"),
            std::string::npos)
      << text;
  EXPECT_NE(text.find("boulder max height 7.3\n"), std::string::npos) << text;
  EXPECT_NE(text.find("boulder throwing distance 5.63\n"), std::string::npos) << text;
}

TEST(Feedback, MatchesScoringOnBundledFixtures) {
  const Scenario cat = Scenario::catapult();
  const Evaluation e = evaluate(load_tree(data_path("machines/catapult.json")), cat);
  ASSERT_TRUE(e.feedback.has_value());
  EXPECT_DOUBLE_EQ(e.feedback->boulder_max_height * e.feedback->boulder_max_distance, e.reward.R);
  EXPECT_EQ(e.feedback->positions.size(), 25u);
  const Json j = feedback_to_json(*e.feedback);
  EXPECT_TRUE(j.contains("boulder max height"));
  EXPECT_TRUE(j.contains("machine damaged"));

  const Scenario car = Scenario::car();
  const Evaluation c = evaluate(load_tree(data_path("machines/car.json")), car);
  ASSERT_TRUE(c.feedback.has_value());
  EXPECT_DOUBLE_EQ(c.feedback->max_distance, c.reward.R);
  EXPECT_EQ(c.feedback->average_speed_per_second.size(), 5u);
  EXPECT_EQ(c.feedback->orientation.size(), 5u);
}

TEST(Feedback, StationaryMachine) {
  const SimTrace tr = synthetic_trace({0, 63}, [](int b, double) { return Vec3(0, 0.5, b * 2.0); });
  const FeedbackBundle f = extract_feedback(tr, Scenario::car());
  EXPECT_EQ(f.max_distance, 0.0);
  EXPECT_EQ(f.max_speed, 0.0);
  for (double s : f.average_speed_per_second) EXPECT_EQ(s, 0.0);
  EXPECT_TRUE(f.breaks.empty());
  EXPECT_EQ(format_feedback(f).find("machine damaged"), std::string::npos);
}

// ---------------------------------------------------------------- queries

TEST(Query, WindowStopsAtBreak) {
  std::vector<int> types(9, 15);
  types[0] = 0;
  SimTrace tr = synthetic_trace(types, [](int b, double t) { return Vec3(b, 0.5, t); });
  tr.events = {{8, 0.4}};
  const auto res = query_feedback(tr, parse_query(R"([{"id": 8, "duration": [0, 1], "properties": ["position"]}])"));
  ASSERT_EQ(res.size(), 1u);
  EXPECT_FALSE(res[0].error.has_value());
  ASSERT_TRUE(res[0].broken_at.has_value());
  EXPECT_DOUBLE_EQ(*res[0].broken_at, 0.4);
  ASSERT_EQ(res[0].times.size(), 2u);
  EXPECT_DOUBLE_EQ(res[0].position[1].z(), 0.4);
}

TEST(Query, Errors) {
  std::vector<int> types = {0, 15, 9};
  const SimTrace tr = synthetic_trace(types, [](int b, double t) { return Vec3(b, 0.5, t); });
  const auto res = query_feedback(tr, parse_query(R"(<Required Feedback>[
      {"id": 1, "duration": [0, 9], "properties": ["position"]},
      {"id": 1, "duration": [2, 1], "properties": ["position"]},
      {"id": 1, "duration": [-1, 1], "properties": ["position"]},
      {"id": 5, "duration": [0, 1], "properties": ["position"]},
      {"id": 1, "duration": [0, 1], "properties": ["length"]},
      {"id": 2, "duration": [0, 1], "properties": ["length"]}]</Required Feedback>)"));
  ASSERT_EQ(res.size(), 6u);
  EXPECT_EQ(res[0].error, QueryErrorKind::BadWindow);
  EXPECT_EQ(res[1].error, QueryErrorKind::BadWindow);
  EXPECT_EQ(res[2].error, QueryErrorKind::BadWindow);
  EXPECT_EQ(res[3].error, QueryErrorKind::UnknownBlock);
  EXPECT_EQ(res[4].error, QueryErrorKind::LengthOnNonLinear);
  EXPECT_FALSE(res[5].error.has_value());
  EXPECT_EQ(res[5].length.size(), 5u);
  const Json j = query_results_to_json(res);
  EXPECT_EQ(j[0]["error"], "BadWindow");
  EXPECT_EQ(j[5]["length"].size(), 5u);
}

TEST(Query, MalformedRequests) {
  EXPECT_THROW(parse_query("not json"), QueryFormatError);
  EXPECT_THROW(parse_query(R"({"id": 1})"), QueryFormatError);
  EXPECT_THROW(parse_query(R"([{"id": 1, "duration": [0]}])"), QueryFormatError);
  EXPECT_THROW(parse_query(R"([{"id": 1, "duration": [0, 1], "properties": ["colour"]}])"), QueryFormatError);
}

TEST(Query, ResultsAreSubsequencesOfTheTrace) {
  const SimTrace tr = simulate(load_tree(data_path("machines/catapult.json")), Scenario::catapult());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const int id = std::uniform_int_distribution<int>(0, 16)(rng);
    QueryEntry q{id, a, b, {QueryProperty::Position}};
    const QueryResult r = query_feedback(tr, {q}).at(0);
    ASSERT_FALSE(r.error.has_value());
    std::size_t k = 0;
    for (std::size_t i2 = 0; i2 < r.times.size(); ++i2) {
      while (k < tr.samples.size() && tr.samples[k].time != r.times[i2]) ++k;
      ASSERT_LT(k, tr.samples.size());
      EXPECT_EQ(r.position[i2], tr.samples[k].blocks[static_cast<std::size_t>(id)].position);
      EXPECT_GE(r.times[i2], a - 1e-9);
      EXPECT_LE(r.times[i2], b + 1e-9);
      if (r.broken_at) {
        EXPECT_LE(r.times[i2], *r.broken_at + 1e-9);
      }
    }
  }
}

// ---------------------------------------------------------------- metrics

TEST(Metrics, RatesAndMoments) {
  const std::vector<RunRecord> runs = {
      {true, true, true, 2.0}, {true, true, true, 4.0}, {true, false, false, 0.0}, {false, false, false, 0.0}};
  const BatchMetrics m = batch_metrics(runs);
  EXPECT_EQ(m.total, 4);
  EXPECT_DOUBLE_EQ(m.file_rate, 0.75);
  EXPECT_DOUBLE_EQ(*m.spatial_rate, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.machine_rate, 0.5);
  EXPECT_DOUBLE_EQ(*m.mean, 3.0);
  EXPECT_DOUBLE_EQ(*m.max, 4.0);
  EXPECT_DOUBLE_EQ(*m.stddev, 1.0);
  EXPECT_EQ(m.render(), "2/4, 3.00");
}

TEST(Metrics, SummaryLine) {
  std::vector<RunRecord> runs(50, RunRecord{true, true, false, 0.0});
  for (int i = 0; i < 11; ++i) runs[static_cast<std::size_t>(i)] = {true, true, true, i == 0 ? 0.66 : 0.0};
  EXPECT_EQ(batch_metrics(runs).render(), "11/50, 0.06");
}

TEST(Metrics, NoValidRuns) {
  const std::vector<RunRecord> runs = {{false, false, false, 0.0}};
  const BatchMetrics m = batch_metrics(runs);
  EXPECT_FALSE(m.spatial_rate.has_value());
  EXPECT_FALSE(m.mean.has_value());
  EXPECT_EQ(m.render(), "0/1, n/a");
  EXPECT_TRUE(metrics_to_json(m)["mean"].is_null());
}

TEST(Metrics, EmptyBatch) { EXPECT_THROW(batch_metrics({}), std::invalid_argument); }
