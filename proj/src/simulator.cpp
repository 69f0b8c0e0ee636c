#include "fan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fan/evaluation.hpp"

namespace fan {

WorldState initial_world(const SceneScript& scene, Point2 follower) {
  WorldState w;
  w.follower = follower;
  for (const auto& o : scene.objects) w.targets.push_back(object_position(o, 0.0));
  return w;
}

WorldState step_world(const WorldState& world, const ControlCommand& command,
                      const SceneScript& scene, double dt) {
  WorldState next;
  next.t = world.t + dt;
  next.follower = {world.follower.x + command.vx * dt, world.follower.y + command.vy * dt};
  for (const auto& o : scene.objects) next.targets.push_back(object_position(o, next.t));
  return next;
}

const std::vector<std::string>& trajectory_csv_columns(bool with_timings) {
  static const std::vector<std::string> base{
      "step",   "t",      "follower_x", "follower_y",     "target_x",   "target_y",
      "has_error", "err_x", "err_y",    "cmd_vx",         "cmd_vy",     "status",
      "event",  "target_visible", "has_output", "iou"};
  static const std::vector<std::string> timed = [] {
    auto v = base;
    for (const char* c : {"ingest_ms", "detection_ms", "tracking_ms", "redetection_ms", "control_ms"}) {
      v.emplace_back(c);
    }
    return v;
  }();
  return with_timings ? timed : base;
}

std::string TrajectoryLog::to_csv(bool with_timings) const {
  std::string out;
  const auto& cols = trajectory_csv_columns(with_timings);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out += cols[i];
    out += i + 1 < cols.size() ? ',' : '\n';
  }
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.step, r.t,
                       r.follower.x, r.follower.y, r.target.x, r.target.y, r.has_error ? 1 : 0,
                       r.error.ex, r.error.ey, r.command.vx, r.command.vy, to_string(r.status),
                       to_string(r.event), r.target_visible ? 1 : 0, r.has_output ? 1 : 0, r.iou);
    if (with_timings) {
      out += fmt::format(",{},{},{},{},{}", r.timings.ingest_ms, r.timings.detection_ms,
                         r.timings.tracking_ms, r.timings.redetection_ms, r.timings.control_ms);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json TrajectoryLog::to_json(bool with_timings) const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j{{"step", r.step},
                     {"t", r.t},
                     {"follower", {r.follower.x, r.follower.y}},
                     {"target", {r.target.x, r.target.y}},
                     {"error", r.has_error ? nlohmann::json{r.error.ex, r.error.ey} : nlohmann::json()},
                     {"command", {r.command.vx, r.command.vy}},
                     {"status", to_string(r.status)},
                     {"event", to_string(r.event)},
                     {"target_visible", r.target_visible},
                     {"has_output", r.has_output},
                     {"iou", r.iou}};
    if (with_timings) {
      j["timings"] = {{"ingest_ms", r.timings.ingest_ms},
                      {"detection_ms", r.timings.detection_ms},
                      {"tracking_ms", r.timings.tracking_ms},
                      {"redetection_ms", r.timings.redetection_ms},
                      {"control_ms", r.timings.control_ms}};
    }
    rows.push_back(std::move(j));
  }
  return {{"records", std::move(rows)}};
}

std::vector<Point2> TrajectoryLog::follower_path() const {
  std::vector<Point2> p;
  p.reserve(records.size());
  for (const auto& r : records) p.push_back(r.follower);
  return p;
}

std::vector<Point2> TrajectoryLog::target_path() const {
  std::vector<Point2> p;
  p.reserve(records.size());
  for (const auto& r : records) p.push_back(r.target);
  return p;
}

namespace {

int resolve_target(const SceneScript& scene, const std::optional<int>& requested) {
  if (requested) return *requested;
  if (scene.target_object) return *scene.target_object;
  if (scene.objects.empty()) throw ConfigError("scene has no objects to follow");
  return scene.objects.front().id;
}

// Pixel of the mask closest to its centroid.
std::optional<std::pair<int, int>> central_pixel(const Mask& mask) {
  if (mask.empty()) return std::nullopt;
  const PixelPoint c = centroid(mask);
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> at{0, 0};
  for (int r = 0; r < mask.height(); ++r) {
    for (int col = 0; col < mask.width(); ++col) {
      if (!mask.at(r, col)) continue;
      const double d = (col - c.x) * (col - c.x) + (r - c.y) * (r - c.y);
      if (d < best) {
        best = d;
        at = {col, r};
      }
    }
  }
  return at;
}

}  // namespace

QuerySet build_scene_queries(const SceneRenderer& renderer, int target_object,
                             bool environment_queries, const CameraModel& camera) {
  // A reference picture with independent noise.
  SceneScript reference_scene = renderer.scene();
  reference_scene.seed ^= 0x5EED'F00Dull;
  reference_scene.occluders.clear();
  const SceneRenderer reference(reference_scene);

  auto click_on = [&](int object_id, const std::string& label) -> std::optional<QueryDescriptor> {
    const auto& obj = reference_scene.object(object_id);
    CameraModel cam = camera;
    cam.pose = object_position(obj, 0.0);
    const RenderedFrame frame = reference.render(0.0, cam);
    const auto* truth = frame.truth.find(object_id);
    const auto at = truth ? central_pixel(truth->mask) : std::nullopt;
    if (!at) return std::nullopt;
    return query_from_click(frame.field, at->first, at->second, label);
  };

  QuerySet set;
  set.target = "target";
  auto target = click_on(target_object, set.target);
  if (!target) throw ConfigError("target object is not visible in the reference picture");
  set.queries.push_back(std::move(*target));
  if (!environment_queries) return set;

  const int target_class = reference_scene.object(target_object).class_id;
  std::vector<int> seen{target_class};
  for (const auto& o : reference_scene.objects) {
    if (std::find(seen.begin(), seen.end(), o.class_id) != seen.end()) continue;
    seen.push_back(o.class_id);
    if (auto q = click_on(o.id, "class_" + std::to_string(o.class_id))) set.queries.push_back(std::move(*q));
  }
  // Background: a corner of a frame far from every object.
  CameraModel cam = camera;
  cam.pose = {reference_scene.world_extent / 2.0 - 1.0, reference_scene.world_extent / 2.0 - 1.0};
  const RenderedFrame bg = reference.render(0.0, cam);
  Mask free(bg.field.height(), bg.field.width());
  for (std::size_t i = 0; i < free.size(); ++i) free.set(i);
  for (const auto& t : bg.truth.objects) {
    for (std::size_t i = 0; i < free.size(); ++i) {
      if (t.mask.at(i)) free.set(i, false);
    }
  }
  for (std::size_t i = 0; i < free.size(); ++i) {
    if (!free.at(i)) continue;
    const int x = static_cast<int>(i % free.width()), y = static_cast<int>(i / free.width());
    set.queries.push_back(query_from_click(bg.field, x, y, "background"));
    break;
  }
  return set;
}

FollowRun run_following(const SceneScript& scene, const FollowConfig& cfg,
                        const std::function<void(const FollowStep&)>& observer) {
  cfg.controller.validate();
  const SceneRenderer renderer(scene);
  const int target_id = resolve_target(scene, cfg.target_object);
  const SceneObject& target = scene.object(target_id);
  const CameraModel camera0 = cfg.camera_at(object_position(target, 0.0));

  Processor processor(cfg.pipeline,
                      build_scene_queries(renderer, target_id, cfg.environment_queries, camera0));

  const double dt = cfg.controller.dt;
  const double duration = cfg.duration > 0.0 ? std::min(cfg.duration, scene.duration) : scene.duration;
  const auto steps = static_cast<std::int64_t>(std::floor(duration / dt + 1e-9));

  WorldState world = initial_world(scene, cfg.follower_start.value_or(camera0.pose));
  ControllerState controller;
  FollowRun run;
  run.log.records.reserve(static_cast<std::size_t>(steps));
  std::int64_t lost_frames = 0;
  std::vector<float> recycled;

  for (std::int64_t step = 0; step < steps; ++step) {
    world.t = static_cast<double>(step) * dt;
    const CameraModel camera = cfg.camera_at(world.follower);

    StageClock ingest;
    RenderedFrame rendered = renderer.render(world.t, camera, std::move(recycled));
    const double ingest_ms = ingest.elapsed_ms();

    auto field = std::make_shared<DescriptorField>(std::move(rendered.field));
    auto candidates = std::make_shared<std::vector<Mask>>();
    if (cfg.pipeline.detector == DetectorKind::mask) {
      for (const auto& t : rendered.truth.objects) {
        if (!t.mask.empty()) candidates->push_back(t.mask);
      }
    }
    FrameResult result =
        processor.process(Frame{static_cast<std::uint64_t>(step), world.t, field, candidates});
    result.timings.ingest_ms = ingest_ms;

    StageClock control_clock;
    TrajectoryRecord rec;
    rec.step = step;
    rec.t = world.t;
    rec.follower = world.follower;
    rec.target = object_position(target, world.t);
    rec.status = result.status;
    rec.event = result.event;

    const GroundTruthObject* truth = rendered.truth.find(target_id);
    const Mask empty(camera.view_height, camera.view_width);
    const Mask& truth_mask = truth ? truth->mask : empty;
    rec.target_visible = !truth_mask.empty();
    rec.has_output = result.target.has_value() && !result.target->mask.empty();
    rec.iou = iou(rec.has_output ? result.target->mask : empty, truth_mask);

    ControlCommand command;
    if (rec.has_output) {
      const PixelPoint c = centroid(result.target->mask);
      rec.error = pixel_error(c.x, c.y, camera.view_width, camera.view_height);
      rec.has_error = true;
      auto out = compute_command(controller, rec.error, cfg.controller);
      controller = out.state;
      command = out.command;
    } else {
      controller = reset(controller);
    }
    rec.command = command;
    result.timings.control_ms = control_clock.elapsed_ms();
    rec.timings = result.timings;

    // Simulated operator for HUMAN recovery.
    lost_frames = result.status == PipelineStatus::lost ? lost_frames + 1 : 0;
    if (processor.config().recovery == RecoveryMode::human && lost_frames >= cfg.operator_delay_frames &&
        truth_mask.count() >= cfg.pipeline.tracker.min_area) {
      if (const auto at = central_pixel(truth_mask)) {
        processor.commands().push(ClickCommand{at->first, at->second, processor.queries().target});
      }
    }

    run.log.records.push_back(rec);
    if (observer) observer({run.log.records.back(), result, *field, rendered.truth});
    world = step_world(world, command, scene, dt);
    if (field.use_count() == 1) recycled = std::move(*field).release();
  }
  run.stats = processor.stats();
  return run;
}

}  // namespace fan
