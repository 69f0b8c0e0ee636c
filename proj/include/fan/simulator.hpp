#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fan/control.hpp"
#include "fan/pipeline.hpp"
#include "fan/providers.hpp"

namespace fan {

struct WorldState {
  double t = 0.0;
  Point2 follower;
  std::vector<Point2> targets;  // one per scene object, scene order
};

WorldState initial_world(const SceneScript& scene, Point2 follower);

/// Euler step of the follower under `command`; targets follow their script.
WorldState step_world(const WorldState& world, const ControlCommand& command,
                      const SceneScript& scene, double dt);

struct TrajectoryRecord {
  std::int64_t step = 0;
  double t = 0.0;
  Point2 follower;
  Point2 target;
  bool has_error = false;
  PixelError error;
  ControlCommand command;
  PipelineStatus status = PipelineStatus::searching;
  FrameEvent event = FrameEvent::none;
  bool target_visible = false;
  bool has_output = false;
  double iou = 0.0;
  StageTimings timings;
};

struct TrajectoryLog {
  std::vector<TrajectoryRecord> records;

  /// Wall-clock stage timings are only written when `with_timings` is set;
  /// everything else is a deterministic function of the inputs.
  std::string to_csv(bool with_timings = false) const;
  nlohmann::json to_json(bool with_timings = false) const;

  std::vector<Point2> follower_path() const;
  std::vector<Point2> target_path() const;
};

/// Column names of TrajectoryLog::to_csv without and with timings.
const std::vector<std::string>& trajectory_csv_columns(bool with_timings);

struct FollowConfig {
  PipelineConfig pipeline;
  ControllerConfig controller;
  int view_width = 320;
  int view_height = 240;
  double scale = 0.02;
  /// Defaults to the target's position at t = 0.
  std::optional<Point2> follower_start;
  /// Defaults to the scene's target.
  std::optional<int> target_object;
  /// Add background and other-class queries next to the target query.
  bool environment_queries = false;
  /// Simulated seconds; 0 runs the full scene.
  double duration = 0.0;
  /// Frames a simulated operator waits before clicking in HUMAN mode.
  int operator_delay_frames = 10;

  CameraModel camera_at(Point2 pose) const { return {view_width, view_height, scale, pose}; }
};

/// Queries as an operator would supply them: a click on the target taken
/// from another picture of the scene, plus optional environment clicks.
QuerySet build_scene_queries(const SceneRenderer& renderer, int target_object,
                             bool environment_queries, const CameraModel& camera);

struct FollowStep {
  const TrajectoryRecord& record;
  const FrameResult& result;
  const DescriptorField& field;
  const GroundTruth& truth;
};

struct FollowRun {
  TrajectoryLog log;
  ProcessorStats stats;
};

/// Closed loop: render -> detect/track/recover -> pixel error -> command ->
/// world step, logging every step. Loss is logged, never thrown.
FollowRun run_following(const SceneScript& scene, const FollowConfig& cfg,
                        const std::function<void(const FollowStep&)>& observer = {});

}  // namespace fan
