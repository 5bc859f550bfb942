// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include "mechforge/scenario.hpp"
#include "support.hpp"

using namespace mechforge;
using mechforge::testing::data_path;

TEST(Scenario, Defaults) {
  const Scenario car = Scenario::car();
  EXPECT_EQ(car.task, TaskKind::Car);
  EXPECT_EQ(car.target, Direction::ZPos);
  EXPECT_DOUBLE_EQ(car.duration, 5.0);
  EXPECT_DOUBLE_EQ(car.sample_interval, 0.2);
  EXPECT_DOUBLE_EQ(car.power_on_time, 1.0);
  EXPECT_FALSE(car.walls.has_value());

  const Scenario cat = Scenario::catapult();
  EXPECT_EQ(cat.task, TaskKind::Catapult);
  ASSERT_TRUE(cat.walls.has_value());
  EXPECT_DOUBLE_EQ(cat.walls->height, 5.0);
}

TEST(Scenario, TickCounts) {
  const Scenario s = Scenario::car();
  EXPECT_EQ(s.ticks(), 1000);
  EXPECT_EQ(s.ticks_per_sample(), 40);
  EXPECT_EQ(s.sample_count(), 25);
}

TEST(Scenario, BundledFilesLoad) {
  const Scenario car = load_scenario(data_path("scenarios/car.cfg"));
  EXPECT_EQ(car.task, TaskKind::Car);
  EXPECT_EQ(car.car_scoring, CarScoring::Projected);
  const Scenario cat = load_scenario(data_path("scenarios/catapult.cfg"));
  EXPECT_EQ(cat.task, TaskKind::Catapult);
  ASSERT_TRUE(cat.walls.has_value());
  EXPECT_DOUBLE_EQ(cat.walls->half_extent, 10.0);
  EXPECT_EQ(cat.catapult_scoring, CatapultScoring::HeightTimesDistance);
}

TEST(Scenario, TaskKeySelectsDefaultsWherever) {
  const Scenario s = parse_scenario("duration = 3\n# comment\ntask = catapult\n");
  EXPECT_EQ(s.task, TaskKind::Catapult);
  EXPECT_DOUBLE_EQ(s.duration, 3.0);
  EXPECT_TRUE(s.walls.has_value());
}

TEST(Scenario, OverridesApply) {
  const Scenario s = parse_scenario("task = car\ntarget = x-\nspawn_height = 2.5  # lifted\nwalls = on\n");
  EXPECT_EQ(s.target, Direction::XNeg);
  EXPECT_DOUBLE_EQ(s.spawn_height, 2.5);
  EXPECT_TRUE(s.walls.has_value());
}

TEST(Scenario, ErrorsCarryTheLine) {
  try {
    parse_scenario("task = car\n\nbogus_key = 1\n");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse_scenario("duration = fast\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("target = w+\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("task = boat\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("no equals sign\n"), ScenarioError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.cfg"), std::exception);
}

TEST(Scenario, FormatRoundTrips) {
  for (const Scenario& s : {Scenario::car(), Scenario::catapult(), parse_scenario("target = x+\nspawn_height = 1\n")}) {
    const std::string text = format_scenario(s);
    EXPECT_EQ(format_scenario(parse_scenario(text)), text);
  }
}
