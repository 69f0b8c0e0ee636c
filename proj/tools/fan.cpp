// fan: command-line front end for detection, following, serving, evaluation
// and benchmarking.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fan/config.hpp"
#include "fan/detection.hpp"
#include "fan/evaluation.hpp"
#include "fan/gateway.hpp"
#include "fan/io.hpp"
#include "fan/json_util.hpp"
#include "fan/kernels.hpp"
#include "fan/live.hpp"
#include "fan/protocol.hpp"
#include "fan/scenarios.hpp"
#include "fan/simulator.hpp"
#include "fan/stage_bench.hpp"
#include "fan/visualize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_interrupted{false};

struct SceneSource {
  std::string scene_path;
  std::string preset;
};

void add_scene_options(CLI::App* cmd, SceneSource& src) {
  auto* file = cmd->add_option("--scene", src.scene_path, "Scene script (JSON)")->check(CLI::ExistingFile);
  auto* preset = cmd->add_option("--preset", src.preset, "Built-in scene")
                     ->check(CLI::IsMember(fan::scenarios::names()));
  file->excludes(preset);
}

bool has_scene(const SceneSource& s) { return !s.scene_path.empty() || !s.preset.empty(); }

fan::SceneScript load_scene(const SceneSource& src, const fan::RunConfig& cfg) {
  fan::SceneScript scene;
  if (!src.scene_path.empty()) {
    scene = fan::load_scene(src.scene_path);
  } else if (!src.preset.empty()) {
    scene = fan::scenarios::by_name(src.preset, cfg.seed.value_or(0));
  } else {
    throw UsageError("one of --scene or --preset is required");
  }
  if (cfg.seed) scene.seed = *cfg.seed;
  scene.validate();
  return scene;
}

/// Defaults < config file < flags. Flags are applied by the caller after.
fan::RunConfig base_config(const std::string& config_path, std::optional<std::uint64_t> seed) {
  fan::RunConfig cfg;
  if (!config_path.empty()) cfg = fan::load_run_config(config_path, cfg);
  if (seed) cfg.seed = seed;
  if (cfg.threads > 0) fan::kernels::set_threads(cfg.threads);
  return cfg;
}

json region_json(const fan::LabeledRegion& r) {
  const auto b = fan::bounding_box(r.mask);
  return {{"label", r.label ? json(*r.label) : json()},
          {"score", r.score},
          {"query_index", r.query_index},
          {"area", r.mask.count()},
          {"bbox", {b.x, b.y, b.w, b.h}}};
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw fan::Error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses trajectory CSV written by `fan follow`.
std::pair<std::vector<fan::Point2>, std::vector<fan::Point2>> read_trajectory(const fs::path& p) {
  std::istringstream in(read_text(p));
  std::string line;
  if (!std::getline(in, line)) throw fan::FormatError("empty trajectory file", 0);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw fan::FormatError("trajectory file lacks column " + name, 0);
  };
  const auto fx = col("follower_x"), fy = col("follower_y"), tx = col("target_x"), ty = col("target_y");
  std::vector<fan::Point2> follower, target;
  std::uint64_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != header.size()) throw fan::FormatError("ragged trajectory row", offset);
    try {
      follower.push_back({std::stod(cells[fx]), std::stod(cells[fy])});
      target.push_back({std::stod(cells[tx]), std::stod(cells[ty])});
    } catch (const std::logic_error&) {
      throw fan::FormatError("non-numeric trajectory value", offset);
    }
    offset += line.size() + 1;
  }
  return {follower, target};
}

// ---- detect ---------------------------------------------------------------

struct DetectArgs {
  std::string field;
  SceneSource scene;
  double time = 0.0;
  std::vector<double> pose;
  std::string masks;
  std::string queries;
  std::string mode = "coarse";
  std::optional<double> alpha;
  std::string out = "detect_out";
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_detect(const DetectArgs& a) {
  if (a.field.empty() == !has_scene(a.scene)) {
    throw UsageError("exactly one of --field or --scene/--preset is required");
  }
  fan::RunConfig cfg = base_config(a.config, a.seed);
  if (a.alpha) cfg.follow.pipeline.alpha = a.alpha;
  cfg.validate();

  const fan::QuerySet queries = fan::load_queries(a.queries);
  std::optional<fan::DescriptorField> field;
  std::vector<fan::Mask> masks;
  if (!a.field.empty()) {
    field = fan::io::load_descriptor_field(a.field);
  } else {
    const auto scene = load_scene(a.scene, cfg);
    fan::CameraModel cam = cfg.follow.camera_at({0.0, 0.0});
    if (a.pose.size() == 2) {
      cam.pose = {a.pose[0], a.pose[1]};
    } else if (scene.target_object) {
      cam.pose = fan::object_position(scene.object(*scene.target_object), a.time);
    }
    auto rendered = fan::render_frame(scene, a.time, cam);
    field = std::move(rendered.field);
    if (a.mode == "mask" && a.masks.empty()) {
      for (auto& o : rendered.truth.objects) {
        if (!o.mask.empty()) masks.push_back(std::move(o.mask));
      }
    }
  }
  if (!a.masks.empty()) masks = fan::io::load_masks(a.masks);

  auto dcfg = cfg.follow.pipeline.detection;
  std::vector<fan::LabeledRegion> regions;
  if (a.mode == "mask") {
    if (masks.empty()) throw UsageError("--mode mask needs --masks or a scene to take masks from");
    dcfg.similarity.alpha = cfg.follow.pipeline.alpha.value_or(fan::kMaskPathAlpha);
    regions = fan::classify_regions(*field, masks, queries.queries, dcfg);
  } else {
    dcfg.similarity.alpha = cfg.follow.pipeline.alpha.value_or(
        queries.queries.size() > 1 ? fan::kCoarseMultiQueryAlpha : fan::kCoarseSingleQueryAlpha);
    regions = fan::coarse_detect(*field, queries.queries, queries.target, dcfg);
  }

  fs::create_directories(a.out);
  json j{{"mode", a.mode},
         {"alpha", dcfg.similarity.alpha},
         {"width", field->width()},
         {"height", field->height()},
         {"target", queries.target},
         {"regions", json::array()}};
  std::vector<fan::Mask> out_masks;
  for (const auto& r : regions) {
    j["regions"].push_back(region_json(r));
    out_masks.push_back(r.mask);
  }
  fan::json_util::save_file(fs::path(a.out) / "annotations.json", j);
  fan::io::write_masks(fs::path(a.out) / "regions.fanm", out_masks);
  std::vector<fan::LabeledRegion> labeled;
  for (const auto& r : regions) {
    if (r.labeled()) labeled.push_back(r);
  }
  fan::Image img = fan::visualize_field(*field);
  fan::overlay_regions(img, labeled);
  fan::io::write_file(fs::path(a.out) / "visualization.png", fan::encode_png(img));
  std::cout << j.dump() << "\n";
  return kOk;
}

// ---- follow ---------------------------------------------------------------

struct FollowArgs {
  SceneSource scene;
  std::optional<std::string> controller;
  std::optional<std::string> recovery;
  std::optional<std::string> detector;
  std::optional<double> duration;
  bool environment = false;
  bool timings = false;
  bool save_masks = false;
  std::string out = "follow_out";
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_follow(const FollowArgs& a) {
  fan::RunConfig cfg = base_config(a.config, a.seed);
  if (a.controller) cfg.follow.controller.mode = fan::control_mode_from_string(*a.controller);
  if (a.recovery) cfg.follow.pipeline.recovery = fan::recovery_mode_from_string(*a.recovery);
  if (a.detector) cfg.follow.pipeline.detector = fan::detector_from_string(*a.detector);
  if (a.duration) cfg.follow.duration = *a.duration;
  if (a.environment) cfg.follow.environment_queries = true;
  cfg.validate();
  const auto scene = load_scene(a.scene, cfg);

  std::vector<fan::Mask> predicted, truth;
  std::vector<double> ious;
  fan::FollowRun run = fan::run_following(scene, cfg.follow, [&](const fan::FollowStep& s) {
    ious.push_back(s.record.iou);
    if (!a.save_masks) return;
    const int target = cfg.follow.target_object.value_or(scene.target_object.value_or(scene.objects.front().id));
    const auto* gt = s.truth.find(target);
    const fan::Mask empty(s.field.height(), s.field.width());
    truth.push_back(gt ? gt->mask : empty);
    predicted.push_back(s.result.target ? s.result.target->mask : empty);
  });

  fs::create_directories(a.out);
  const fs::path out(a.out);
  const auto& log = run.log;
  fan::io::write_text(out / "trajectory.csv", log.to_csv(false));
  fan::json_util::save_file(out / "trajectory.json", log.to_json(false));
  if (a.timings) fan::io::write_text(out / "timings.csv", log.to_csv(true));
  if (a.save_masks) {
    fan::io::write_masks(out / "predicted.fanm", predicted);
    fan::io::write_masks(out / "truth.fanm", truth);
  }
  std::vector<double> t;
  for (const auto& r : log.records) t.push_back(r.t);
  const auto follower = log.follower_path();
  const auto target = log.target_path();
  fan::io::write_text(out / "trajectory_comparison.csv",
                      fan::trajectory_comparison_csv(t, follower, target));

  fan::EvalReport report;
  report.ious = ious;
  report.miou = fan::mean_iou(ious);
  report.trajectory_distance = fan::trajectory_distance(follower, target);
  fan::emit_report(report, out / "report.json", fan::ReportFormat::json);
  fan::emit_report(report, out / "report.csv", fan::ReportFormat::csv);
  fan::json_util::save_file(out / "config.json", fan::run_config_to_json(cfg));

  std::size_t lost = 0, recovered = 0;
  for (const auto& r : log.records) {
    lost += r.event == fan::FrameEvent::lost;
    recovered += r.event == fan::FrameEvent::recovered;
  }
  std::cout << json{{"steps", log.records.size()},
                    {"controller", fan::to_string(cfg.follow.controller.mode)},
                    {"detector", fan::to_string(cfg.follow.pipeline.detector)},
                    {"recovery", fan::to_string(cfg.follow.pipeline.recovery)},
                    {"trajectory_distance", *report.trajectory_distance},
                    {"miou", report.miou ? json(*report.miou) : json()},
                    {"lost_events", lost},
                    {"recovered_events", recovered}}
                   .dump()
            << "\n";
  return kOk;
}

// ---- serve ----------------------------------------------------------------

struct ServeArgs {
  SceneSource scene;
  std::string fields_dir;
  std::string queries;
  int port = 8765;
  std::string address = "127.0.0.1";
  double rate = 20.0;
  std::uint64_t max_frames = 0;
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_serve(const ServeArgs& a) {
  if (a.fields_dir.empty() == !has_scene(a.scene)) {
    throw UsageError("exactly one of --fields-dir or --scene/--preset is required");
  }
  if (a.port < 0 || a.port > 65535) throw UsageError("--port must lie in [0, 65535]");
  fan::RunConfig cfg = base_config(a.config, a.seed);
  cfg.validate();

  std::unique_ptr<fan::SceneFrameSource> scene_source;
  std::unique_ptr<fan::FieldDirectorySource> dir_source;
  fan::QuerySet queries;
  if (!a.fields_dir.empty()) {
    if (a.queries.empty()) throw UsageError("--fields-dir needs --queries");
    dir_source = std::make_unique<fan::FieldDirectorySource>(a.fields_dir, a.rate);
    queries = fan::load_queries(a.queries);
  } else {
    const auto scene = load_scene(a.scene, cfg);
    const int target = scene.target_object.value_or(scene.objects.at(0).id);
    const auto cam = cfg.follow.camera_at(fan::object_position(scene.object(target), 0.0));
    scene_source = std::make_unique<fan::SceneFrameSource>(
        scene, cam, cfg.follow.pipeline.detector == fan::DetectorKind::mask);
    queries = a.queries.empty()
                  ? fan::build_scene_queries(scene_source->renderer(), target,
                                             cfg.follow.environment_queries, cam)
                  : fan::load_queries(a.queries);
  }

  fan::Processor processor(cfg.follow.pipeline, queries);
  fan::Gateway gateway(static_cast<std::uint16_t>(a.port),
                       [&](fan::Command c) { processor.commands().push(std::move(c)); }, a.address);
  std::optional<fan::LiveFollower> follower;
  if (scene_source) follower.emplace(*scene_source, cfg.follow.controller);

  fan::FrameProducer producer;
  if (scene_source) {
    producer = [&](std::uint64_t i) { return (*scene_source)(i); };
  } else {
    producer = [&](std::uint64_t i) { return (*dir_source)(i); };
  }
  fan::LiveRunner runner(processor, producer, {a.rate, a.max_frames},
                         [&](const fan::Frame& frame, const fan::FrameResult& result) {
                           if (follower) follower->update(result);
                           const auto& f = *frame.field;
                           gateway.set_frame_shape(f.shape());
                           fan::Image img = fan::visualize_field(f);
                           std::vector<fan::LabeledRegion> labeled;
                           for (const auto& r : result.annotations) {
                             if (r.labeled()) labeled.push_back(r);
                           }
                           fan::overlay_regions(img, labeled);
                           fan::protocol::FrameMessage m;
                           m.seq = result.seq;
                           m.width = static_cast<std::uint32_t>(f.width());
                           m.height = static_cast<std::uint32_t>(f.height());
                           m.png = fan::protocol::base64_encode(fan::encode_png(img));
                           m.annotations = fan::protocol::annotations_of(result);
                           m.status = result.status;
                           m.timings = result.timings;
                           gateway.broadcast(fan::protocol::serialize_frame(m));
                         });
  gateway.start();
  std::cout << json{{"port", gateway.port()}, {"address", a.address}}.dump() << std::endl;
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  runner.start();
  std::thread watcher([&] {
    while (!g_interrupted) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      if (runner.failure()) break;
    }
    runner.stop();
  });
  runner.wait();
  g_interrupted = true;
  watcher.join();
  gateway.stop();
  if (auto f = runner.failure()) throw fan::Error(*f);
  return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string log;
  std::string annotations;
  std::string trajectory;
  std::string out = "report.json";
  std::string format = "json";
  std::optional<double> iou_min;
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_eval(const EvalArgs& a) {
  fan::RunConfig cfg = base_config(a.config, a.seed);
  if (a.iou_min) cfg.iou_min = *a.iou_min;
  cfg.validate();
  const auto format = fan::report_format_from_string(a.format);

  fan::EvalReport report;
  if (!a.log.empty()) {
    const auto predicted = fan::io::load_masks(a.log);
    const auto truth = fan::io::load_masks(a.annotations);
    fan::AnnotatedSequence seq{"target", truth};
    std::vector<std::vector<fan::LabeledRegion>> detections;
    for (const auto& m : predicted) {
      std::vector<fan::LabeledRegion> frame;
      if (!m.empty()) frame.push_back({m, std::string("target"), 1.0, 0});
      detections.push_back(std::move(frame));
    }
    const auto rates = fan::detection_rates(detections, seq, cfg.iou_min);
    report.tp_rate = rates.tp_rate;
    report.fp_count = rates.false_positives;
    report.appearances = rates.appearances;
    report.ious = fan::frame_ious(predicted, truth);
    report.miou = fan::mean_iou(report.ious);
  }
  if (!a.trajectory.empty()) {
    const auto [follower, target] = read_trajectory(a.trajectory);
    report.trajectory_distance = fan::trajectory_distance(follower, target);
  }
  fan::emit_report(report, a.out, format);
  std::cout << fan::report_to_json(report).dump() << "\n";
  return kOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> sizes{"320x240", "640x480"};
  int frames = 20;
  int dim = 32;
  std::string execution = "serial";
  std::string out;
  std::string format = "csv";
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_bench(const BenchArgs& a) {
  fan::RunConfig cfg = base_config(a.config, a.seed);
  cfg.validate();
  fan::EvalReport report;
  for (const auto& s : a.sizes) {
    int w = 0, h = 0;
    char x = 0;
    std::istringstream in(s);
    if (!(in >> w >> x >> h) || x != 'x' || !in.eof()) {
      throw UsageError("sizes are WIDTHxHEIGHT, got '" + s + "'");
    }
    fan::StageBenchConfig bc{w, h, a.dim, a.frames, fan::execution_from_string(a.execution),
                             cfg.seed.value_or(0)};
    for (auto& row : fan::run_stage_bench(bc)) report.fps.push_back(std::move(row));
  }
  const auto format = fan::report_format_from_string(a.format);
  if (!a.out.empty()) fan::emit_report(report, a.out, format);
  std::cout << fmt::format("{:<12} {:>9} {:>10} {:>10}\n", "stage", "size", "mean_ms", "fps");
  for (const auto& r : report.fps) {
    std::cout << fmt::format("{:<12} {:>9} {:>10.3f} {:>10.2f}\n", r.stage,
                             fmt::format("{}x{}", r.width, r.height), r.mean_ms, r.fps);
  }
  return kOk;
}

// ---- render ---------------------------------------------------------------

struct RenderArgs {
  SceneSource scene;
  double time = 0.0;
  std::vector<double> pose;
  std::string out = "render_out";
  bool environment = false;
  std::string config;
  std::optional<std::uint64_t> seed;
  bool dump_scene = false;
};

int cmd_render(const RenderArgs& a) {
  fan::RunConfig cfg = base_config(a.config, a.seed);
  cfg.validate();
  const auto scene = load_scene(a.scene, cfg);
  const int target = scene.target_object.value_or(scene.objects.at(0).id);
  fan::CameraModel cam = cfg.follow.camera_at(fan::object_position(scene.object(target), a.time));
  if (a.pose.size() == 2) cam.pose = {a.pose[0], a.pose[1]};
  const fan::SceneRenderer renderer(scene);
  const auto frame = renderer.render(a.time, cam);

  fs::create_directories(a.out);
  const fs::path out(a.out);
  fan::io::write_descriptor_field(out / "field.fand", frame.field);
  std::vector<fan::Mask> masks;
  json objects = json::array();
  for (const auto& o : frame.truth.objects) {
    masks.push_back(o.mask);
    objects.push_back({{"object", o.object_id}, {"class", o.class_id}, {"area", o.mask.count()}});
  }
  fan::io::write_masks(out / "masks.fanm", masks);
  const auto target_truth = frame.truth.find(target);
  fan::io::write_masks(out / "target.fanm",
                       std::vector<fan::Mask>{target_truth ? target_truth->mask
                                                           : fan::Mask(cam.view_height, cam.view_width)});
  fan::json_util::save_file(out / "queries.json",
                            fan::queries_to_json(fan::build_scene_queries(
                                renderer, target, a.environment || cfg.follow.environment_queries,
                                fan::CameraModel{cam.view_width, cam.view_height, cam.scale, {}})));
  if (a.dump_scene) fan::json_util::save_file(out / "scene.json", fan::scene_to_json(scene));
  fan::io::write_file(out / "visualization.png", fan::encode_png(fan::visualize_field(frame.field)));
  std::cout << json{{"objects", objects}, {"width", cam.view_width}, {"height", cam.view_height}}.dump()
            << "\n";
  return kOk;
}

template <class Args>
void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--config", a.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "Seed overriding the scene and config seeds");
}

}  // namespace

int main(int argc, char** argv) {
  fan::init_logging();
  CLI::App app{"fan: open-vocabulary detect, track, re-detect and follow"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "fan 1.0.0");

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "Detect query objects in one descriptor field");
  d->add_option("--field", detect.field, "Descriptor field (FAND)")->check(CLI::ExistingFile);
  add_scene_options(d, detect.scene);
  d->add_option("--time", detect.time, "Scene time to render (s)");
  d->add_option("--pose", detect.pose, "Camera centre x y (m); default follows the target")->expected(2);
  d->add_option("--masks", detect.masks, "Candidate masks (FANM) for the mask path")->check(CLI::ExistingFile);
  d->add_option("--queries", detect.queries, "Query set (JSON)")->required()->check(CLI::ExistingFile);
  d->add_option("--mode", detect.mode, "Detection path")->check(CLI::IsMember({"mask", "coarse"}));
  d->add_option("--alpha", detect.alpha, "Similarity threshold; default depends on the path")
      ->check(CLI::Range(0.0, 1.0));
  d->add_option("--out", detect.out, "Output directory");
  add_common(d, detect);

  FollowArgs follow;
  auto* f = app.add_subcommand("follow", "Closed-loop following in the simulator");
  add_scene_options(f, follow.scene);
  f->add_option("--controller", follow.controller, "P or PID (default P)")
      ->check(CLI::IsMember({"P", "PID"}));
  f->add_option("--recovery", follow.recovery, "tracker, human or auto (default auto)")
      ->check(CLI::IsMember({"tracker", "human", "auto", "TRACKER_ONLY", "HUMAN", "AUTOMATIC"}));
  f->add_option("--detector", follow.detector, "mask or coarse (default coarse)")
      ->check(CLI::IsMember({"mask", "coarse"}));
  f->add_option("--duration", follow.duration, "Simulated seconds (default: whole scene)")
      ->check(CLI::PositiveNumber);
  f->add_flag("--environment-queries", follow.environment, "Add background and other-class queries");
  f->add_flag("--timings", follow.timings, "Also write wall-clock stage timings");
  f->add_flag("--save-masks", follow.save_masks, "Write predicted and ground-truth masks (FANM)");
  f->add_option("--out", follow.out, "Output directory");
  add_common(f, follow);

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Run the live pipeline behind the websocket gateway");
  add_scene_options(s, serve.scene);
  s->add_option("--fields-dir", serve.fields_dir, "Replay .fand files in name order")
      ->check(CLI::ExistingDirectory);
  s->add_option("--queries", serve.queries, "Query set (JSON); default clicks the scene target")
      ->check(CLI::ExistingFile);
  s->add_option("--port", serve.port, "TCP port; 0 picks a free one");
  s->add_option("--address", serve.address, "Listen address");
  s->add_option("--rate", serve.rate, "Producer frame rate (Hz)")->check(CLI::PositiveNumber);
  s->add_option("--max-frames", serve.max_frames, "Stop after this many frames; 0 runs to the end");
  add_common(s, serve);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score predicted masks and trajectories");
  auto* log_opt = e->add_option("--log", eval.log, "Predicted target masks per frame (FANM)")
                      ->check(CLI::ExistingFile);
  auto* ann_opt = e->add_option("--annotations", eval.annotations, "Ground-truth target masks (FANM)")
                      ->check(CLI::ExistingFile);
  log_opt->needs(ann_opt);
  ann_opt->needs(log_opt);
  e->add_option("--trajectory", eval.trajectory, "Trajectory CSV from follow")->check(CLI::ExistingFile);
  e->add_option("--out", eval.out, "Report path");
  e->add_option("--format", eval.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  e->add_option("--iou-min", eval.iou_min, "IoU for a true positive (default 0.5)")
      ->check(CLI::Range(0.0, 1.0));
  add_common(e, eval);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Per-stage FPS table");
  b->add_option("--sizes", bench.sizes, "Frame sizes")->delimiter(',');
  b->add_option("--frames", bench.frames, "Frames per size")->check(CLI::PositiveNumber);
  b->add_option("--dim", bench.dim, "Descriptor dimension")->check(CLI::PositiveNumber);
  b->add_option("--execution", bench.execution, "Kernel implementation")
      ->check(CLI::IsMember({"serial", "parallel"}));
  b->add_option("--out", bench.out, "Also write the table as a report");
  b->add_option("--format", bench.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  add_common(b, bench);

  RenderArgs render;
  auto* r = app.add_subcommand("render", "Export a scene frame, its masks and target queries");
  add_scene_options(r, render.scene);
  r->add_option("--time", render.time, "Scene time (s)");
  r->add_option("--pose", render.pose, "Camera centre x y (m); default follows the target")->expected(2);
  r->add_flag("--environment-queries", render.environment, "Add background and other-class queries");
  r->add_flag("--scene-json", render.dump_scene, "Also write the scene script");
  r->add_option("--out", render.out, "Output directory");
  add_common(r, render);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*d) return cmd_detect(detect);
    if (*f) return cmd_follow(follow);
    if (*s) return cmd_serve(serve);
    if (*e) {
      if (eval.log.empty() && eval.trajectory.empty()) {
        throw UsageError("eval needs --log/--annotations or --trajectory");
      }
      return cmd_eval(eval);
    }
    if (*b) return cmd_bench(bench);
    if (*r) return cmd_render(render);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kUsage;
  } catch (const fan::FormatError& err) {
    std::cerr << "format error: " << err.what() << "\n";
    return kData;
  } catch (const fan::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kData;
  } catch (const fan::DimensionError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  } catch (const fan::ShapeError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  } catch (const fan::RangeError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  } catch (const json::exception& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  } catch (const fan::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
