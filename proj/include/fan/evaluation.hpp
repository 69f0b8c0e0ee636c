#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fan/core.hpp"
#include "fan/providers.hpp"

namespace fan {

/// |a ∩ b| / |a ∪ b|; two empty masks score 1.
double iou(const Mask& a, const Mask& b);

/// Ground-truth target masks per frame; an empty mask means the target is
/// not visible in that frame.
struct AnnotatedSequence {
  std::string target_label;
  std::vector<Mask> target_masks;

  std::size_t appearances() const;
};

struct DetectionRates {
  std::size_t frames = 0;
  std::size_t appearances = 0;
  std::size_t true_positives = 0;
  /// Counted per frame: every target-labeled detection that is not the
  /// frame's match adds one.
  std::size_t false_positives = 0;
  /// Unset when the target never appears.
  std::optional<double> tp_rate;
};

inline constexpr double kDefaultIouMin = 0.5;

DetectionRates detection_rates(std::span<const std::vector<LabeledRegion>> detections,
                               const AnnotatedSequence& annotations,
                               double iou_min = kDefaultIouMin);

/// The frame's target output: the highest-scoring region labeled `label`, or
/// an empty mask of `shape` when there is none.
Mask target_prediction(std::span<const LabeledRegion> detections, std::string_view label,
                       Shape shape);

std::vector<double> frame_ious(std::span<const Mask> predicted, std::span<const Mask> truth);

/// Mean over the values; unset for an empty list.
std::optional<double> mean_iou(std::span<const double> ious);

/// Mean over follower points of the distance to the closest target point.
double trajectory_distance(std::span<const Point2> follower, std::span<const Point2> target);

/// Per-point closest distances used by trajectory_distance.
std::vector<double> closest_distances(std::span<const Point2> follower,
                                      std::span<const Point2> target);

/// Follower and target paths side by side with the closest-point distance
/// of every follower sample.
std::string trajectory_comparison_csv(std::span<const double> t, std::span<const Point2> follower,
                                      std::span<const Point2> target);

struct FpsRow {
  std::string stage;
  int width = 0;
  int height = 0;
  double mean_ms = 0.0;
  double fps = 0.0;

  friend bool operator==(const FpsRow&, const FpsRow&) = default;
};

struct EvalReport {
  std::optional<double> tp_rate;
  std::optional<std::size_t> fp_count;
  std::optional<std::size_t> appearances;
  std::vector<double> ious;
  std::optional<double> miou;
  std::optional<double> trajectory_distance;
  std::vector<FpsRow> fps;

  void validate() const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

enum class ReportFormat { csv, json };

ReportFormat report_format_from_string(std::string_view name);

/// Fixed key order; missing sections are explicit nulls.
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Long-form `section,key,value` table; missing values are written as null.
std::string report_to_csv(const EvalReport& report);

void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format);

}  // namespace fan
