#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "../support/scenes.hpp"
#include "fan/scenarios.hpp"
#include "fan/simulator.hpp"

using namespace fan;

TEST(StepWorld, EulerAndInterpolation) {
  auto s = fixtures::disc_scene(0.0);
  s.objects[0].waypoints = {{0.0, 0.0, 0.0}, {10.0, 10.0, 0.0}};
  s.world_extent = 40.0;
  auto w = initial_world(s, {1.0, 2.0});
  auto still = step_world(w, {0, 0}, s, 0.05);
  EXPECT_EQ(still.follower.x, 1.0);
  EXPECT_EQ(still.follower.y, 2.0);
  const auto moved = step_world(w, {1.0, 0.0}, s, 0.05);
  EXPECT_NEAR(moved.follower.x, 1.05, 1e-12);
  EXPECT_NEAR(moved.t, 0.05, 1e-12);
  for (int i = 0; i < 100; ++i) w = step_world(w, {0, 0}, s, 0.05);
  EXPECT_NEAR(w.t, 5.0, 1e-9);
  EXPECT_NEAR(w.targets[0].x, 5.0, 1e-9);
  EXPECT_NEAR(w.targets[0].y, 0.0, 1e-12);
}

TEST(RunFollowing, StationaryCentredStart) {
  const auto scene = scenarios::stationary(3, 5.0);
  FollowConfig cfg;
  const auto run = run_following(scene, cfg);
  ASSERT_EQ(run.log.records.size(), std::size_t(std::lround(5.0 / cfg.controller.dt)));
  double sum = 0;
  int n = 0;
  for (const auto& r : run.log.records) {
    if (!r.has_error) continue;
    sum += std::hypot(r.error.ex, r.error.ey);
    ++n;
  }
  ASSERT_GT(n, 0);
  EXPECT_LT(sum / n, 1.0);
}

TEST(RunFollowing, DisplacementBoundedByClampProperty) {
  const auto scene = scenarios::following(2, 10.0);
  FollowConfig cfg;
  cfg.controller.v_max = 0.3;
  cfg.controller.mode = ControlMode::pid;
  cfg.follower_start = Point2{1.5, 1.0};
  const auto log = run_following(scene, cfg).log;
  for (std::size_t i = 1; i < log.records.size(); ++i) {
    const auto& a = log.records[i - 1].follower;
    const auto& b = log.records[i].follower;
    EXPECT_LE(std::fabs(b.x - a.x), 0.3 * cfg.controller.dt + 1e-12);
    EXPECT_LE(std::fabs(b.y - a.y), 0.3 * cfg.controller.dt + 1e-12);
  }
}

TEST(RunFollowing, DeterministicLog) {
  const auto scene = scenarios::following(4, 4.0);
  FollowConfig cfg;
  const auto a = run_following(scene, cfg).log;
  const auto b = run_following(scene, cfg).log;
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(RunFollowing, CameraCentredOnFollower) {
  const auto scene = scenarios::following(5, 2.0);
  FollowConfig cfg;
  std::size_t checked = 0;
  run_following(scene, cfg, [&](const FollowStep& step) {
    const auto cam = cfg.camera_at(step.record.follower);
    const auto px = cam.world_to_pixel(step.record.follower);
    EXPECT_DOUBLE_EQ(px.x, cfg.view_width / 2);
    EXPECT_DOUBLE_EQ(px.y, cfg.view_height / 2);
    EXPECT_EQ(step.field.width(), cfg.view_width);
    ++checked;
  });
  EXPECT_GT(checked, 0u);
}

TEST(TrajectoryLog, CsvColumns) {
  const auto scene = scenarios::stationary(1, 1.0);
  const auto log = run_following(scene, {}).log;
  for (bool timings : {false, true}) {
    const auto csv = log.to_csv(timings);
    const auto header = csv.substr(0, csv.find('\n'));
    std::string expected;
    for (const auto& c : trajectory_csv_columns(timings)) expected += (expected.empty() ? "" : ",") + c;
    EXPECT_EQ(header, expected);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), std::ptrdiff_t(log.records.size() + 1));
  }
  EXPECT_EQ(log.to_json()["records"].size(), log.records.size());
}
