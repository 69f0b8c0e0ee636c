#include "fan/evaluation.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fan/io.hpp"
#include "fan/json_util.hpp"

namespace fan {

double iou(const Mask& a, const Mask& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("iou: mask shapes differ: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  std::size_t inter = 0, uni = 0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    inter += va[i] & vb[i];
    uni += va[i] | vb[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t AnnotatedSequence::appearances() const {
  std::size_t n = 0;
  for (const auto& m : target_masks) n += m.empty() ? 0 : 1;
  return n;
}

DetectionRates detection_rates(std::span<const std::vector<LabeledRegion>> detections,
                               const AnnotatedSequence& annotations, double iou_min) {
  if (detections.size() != annotations.target_masks.size()) {
    throw DimensionError(fmt::format("detection_rates: {} detection frames for {} annotated frames",
                                     detections.size(), annotations.target_masks.size()));
  }
  if (!(iou_min > 0.0 && iou_min <= 1.0)) throw RangeError("iou_min must be in (0, 1]");
  DetectionRates r;
  r.frames = detections.size();
  for (std::size_t f = 0; f < detections.size(); ++f) {
    const Mask& truth = annotations.target_masks[f];
    const bool visible = !truth.empty();
    r.appearances += visible ? 1 : 0;
    bool matched = false;
    for (const auto& d : detections[f]) {
      if (d.label != annotations.target_label) continue;
      if (visible && !matched && iou(d.mask, truth) >= iou_min) {
        matched = true;
        ++r.true_positives;
      } else {
        ++r.false_positives;
      }
    }
  }
  if (r.appearances > 0) {
    r.tp_rate = static_cast<double>(r.true_positives) / static_cast<double>(r.appearances);
  }
  return r;
}

Mask target_prediction(std::span<const LabeledRegion> detections, std::string_view label,
                       Shape shape) {
  const LabeledRegion* best = nullptr;
  for (const auto& d : detections) {
    if (d.label != label) continue;
    if (!best || d.score > best->score) best = &d;
  }
  if (best) return best->mask;
  return Mask(shape.height, shape.width);
}

std::vector<double> frame_ious(std::span<const Mask> predicted, std::span<const Mask> truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError(fmt::format("frame_ious: {} predicted frames for {} annotated frames",
                                     predicted.size(), truth.size()));
  }
  std::vector<double> out;
  out.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) out.push_back(iou(predicted[i], truth[i]));
  return out;
}

std::optional<double> mean_iou(std::span<const double> ious) {
  if (ious.empty()) return std::nullopt;
  double s = 0.0;
  for (double v : ious) s += v;
  return s / static_cast<double>(ious.size());
}

std::vector<double> closest_distances(std::span<const Point2> follower,
                                      std::span<const Point2> target) {
  if (follower.empty() || target.empty()) {
    throw EmptyRegionError("trajectory_distance: trajectories must be non-empty");
  }
  std::vector<double> out;
  out.reserve(follower.size());
  for (const auto& f : follower) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : target) {
      const double dx = f.x - p.x, dy = f.y - p.y;
      best = std::min(best, dx * dx + dy * dy);
    }
    out.push_back(std::sqrt(best));
  }
  return out;
}

double trajectory_distance(std::span<const Point2> follower, std::span<const Point2> target) {
  const auto d = closest_distances(follower, target);
  double s = 0.0;
  for (double v : d) s += v;
  return s / static_cast<double>(d.size());
}

std::string trajectory_comparison_csv(std::span<const double> t, std::span<const Point2> follower,
                                      std::span<const Point2> target) {
  if (t.size() != follower.size() || follower.size() != target.size()) {
    throw DimensionError("trajectory_comparison_csv: series lengths differ");
  }
  const auto d = closest_distances(follower, target);
  std::string out = "t,follower_x,follower_y,target_x,target_y,closest_distance\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += fmt::format("{},{},{},{},{},{}\n", t[i], follower[i].x, follower[i].y, target[i].x,
                       target[i].y, d[i]);
  }
  return out;
}

void EvalReport::validate() const {
  if (tp_rate && !(*tp_rate >= 0.0 && *tp_rate <= 1.0)) throw RangeError("tp_rate outside [0, 1]");
  if (miou && !(*miou >= 0.0 && *miou <= 1.0)) throw RangeError("miou outside [0, 1]");
  for (double v : ious) {
    if (!(v >= 0.0 && v <= 1.0)) throw RangeError("per-frame iou outside [0, 1]");
  }
  if (trajectory_distance && !(*trajectory_distance >= 0.0)) {
    throw RangeError("trajectory distance must be non-negative");
  }
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw ConfigError("unknown report format '" + std::string(name) + "' (expected csv or json)");
}

namespace {

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

template <class T>
std::string csv_value(const std::optional<T>& v) {
  return v ? fmt::format("{}", *v) : std::string("null");
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j = nlohmann::json::object();
  j["tp_rate"] = opt(r.tp_rate);
  j["fp_count"] = opt(r.fp_count);
  j["fp_unit"] = "per_frame";
  j["appearances"] = opt(r.appearances);
  j["miou"] = opt(r.miou);
  j["ious"] = r.ious.empty() ? nlohmann::json() : nlohmann::json(r.ious);
  j["trajectory_distance"] = opt(r.trajectory_distance);
  if (r.fps.empty()) {
    j["fps"] = nullptr;
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& f : r.fps) {
      rows.push_back({{"stage", f.stage},
                      {"width", f.width},
                      {"height", f.height},
                      {"mean_ms", f.mean_ms},
                      {"fps", f.fps}});
    }
    j["fps"] = std::move(rows);
  }
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  json_util::check_keys(j, {"tp_rate", "fp_count", "fp_unit", "appearances", "miou", "ious",
                            "trajectory_distance", "fps"},
                        "report");
  EvalReport r;
  r.tp_rate = get_opt<double>(j, "tp_rate");
  r.fp_count = get_opt<std::size_t>(j, "fp_count");
  r.appearances = get_opt<std::size_t>(j, "appearances");
  r.miou = get_opt<double>(j, "miou");
  if (j.contains("ious") && !j.at("ious").is_null()) r.ious = j.at("ious").get<std::vector<double>>();
  r.trajectory_distance = get_opt<double>(j, "trajectory_distance");
  if (j.contains("fps") && !j.at("fps").is_null()) {
    for (const auto& row : j.at("fps")) {
      json_util::check_keys(row, {"stage", "width", "height", "mean_ms", "fps"}, "report.fps");
      r.fps.push_back({row.at("stage").get<std::string>(), row.at("width").get<int>(),
                       row.at("height").get<int>(), row.at("mean_ms").get<double>(),
                       row.at("fps").get<double>()});
    }
  }
  r.validate();
  return r;
}

std::string report_to_csv(const EvalReport& r) {
  std::string out = "section,key,value\n";
  out += "summary,tp_rate," + csv_value(r.tp_rate) + "\n";
  out += "summary,fp_count," + csv_value(r.fp_count) + "\n";
  out += "summary,fp_unit,per_frame\n";
  out += "summary,appearances," + csv_value(r.appearances) + "\n";
  out += "summary,miou," + csv_value(r.miou) + "\n";
  out += "summary,trajectory_distance," + csv_value(r.trajectory_distance) + "\n";
  if (r.ious.empty()) out += "iou,null,null\n";
  for (std::size_t i = 0; i < r.ious.size(); ++i) out += fmt::format("iou,{},{}\n", i, r.ious[i]);
  if (r.fps.empty()) out += "fps,null,null\n";
  for (const auto& f : r.fps) {
    out += fmt::format("fps_ms,{}@{}x{},{}\n", f.stage, f.width, f.height, f.mean_ms);
    out += fmt::format("fps,{}@{}x{},{}\n", f.stage, f.width, f.height, f.fps);
  }
  return out;
}

void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
  report.validate();
  if (format == ReportFormat::json) {
    io::write_text(path, report_to_json(report).dump(2) + "\n");
  } else {
    io::write_text(path, report_to_csv(report));
  }
}

}  // namespace fan
