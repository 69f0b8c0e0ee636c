#include "fan/redetection.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "fan/components.hpp"
#include "fan/providers.hpp"

namespace fan {

std::string_view to_string(RecoveryMode mode) {
  switch (mode) {
    case RecoveryMode::tracker_only: return "TRACKER_ONLY";
    case RecoveryMode::human: return "HUMAN";
    case RecoveryMode::automatic: return "AUTOMATIC";
  }
  return "UNKNOWN";
}

RecoveryMode recovery_mode_from_string(std::string_view name) {
  if (name == "TRACKER_ONLY" || name == "tracker") return RecoveryMode::tracker_only;
  if (name == "HUMAN" || name == "human") return RecoveryMode::human;
  if (name == "AUTOMATIC" || name == "auto") return RecoveryMode::automatic;
  throw ConfigError("unknown recovery mode '" + std::string(name) + "'");
}

FeatureMemory::FeatureMemory(int tau, std::size_t capacity) : tau_(tau), capacity_(capacity) {
  if (tau < 1) throw ConfigError("feature memory tau must be at least 1");
  if (capacity < 1) throw ConfigError("feature memory capacity must be at least 1");
}

bool FeatureMemory::maybe_store(std::int64_t frame_index, const DescriptorField& field,
                                const Mask& object_mask) {
  if (frame_index % tau_ != 0) return false;
  if (last_frame_ == frame_index) return false;
  if (object_mask.empty()) {
    spdlog::warn("feature memory: empty object mask at frame {}, skipped", frame_index);
    return false;
  }
  stored_.push_back(region_descriptor(field, object_mask));
  frames_.push_back(frame_index);
  last_frame_ = frame_index;
  while (stored_.size() > capacity_) {
    stored_.pop_front();
    frames_.pop_front();
  }
  return true;
}

QueryDescriptor recovery_query(const FeatureMemory& memory, const std::string& label) {
  if (memory.empty()) throw NoMemoryError("feature memory is empty");
  const auto& stored = memory.stored();
  const std::size_t d = stored.front().size();
  std::vector<double> sum(d, 0.0);
  for (const auto& v : stored) {
    for (std::size_t k = 0; k < d; ++k) sum[k] += v[k];
  }
  std::vector<float> mean(d);
  double sq = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    mean[k] = static_cast<float>(sum[k] / static_cast<double>(stored.size()));
    sq += static_cast<double>(mean[k]) * mean[k];
  }
  if (!(sq > 0.0)) throw NoMemoryError("mean of stored descriptors has zero norm");
  return {label, std::move(mean), QueryKind::region};
}

std::optional<LabeledRegion> redetect(const QueryDescriptor& query, const DescriptorField& field,
                                      const Candidates& candidates, const DetectionConfig& cfg) {
  const std::span<const QueryDescriptor> one(&query, 1);
  std::vector<LabeledRegion> regions;
  if (const auto* masks = std::get_if<std::span<const Mask>>(&candidates)) {
    regions = classify_single(field, *masks, query, cfg);
  } else {
    regions = coarse_detect(field, one, query.label(), cfg);
  }
  return best_region(regions, query.label());
}

LabeledRegion human_redetect(const HumanInput& input, const DescriptorField& field,
                             const std::string& label, const TrackerConfig& cfg) {
  const Shape shape = field.shape();
  if (const auto* box = std::get_if<BoxInput>(&input)) {
    if (box->w <= 0 || box->h <= 0) throw RangeError("box must have positive area");
    if (box->x < 0 || box->y < 0 || box->x + box->w > shape.width ||
        box->y + box->h > shape.height) {
      throw RangeError("box outside the frame");
    }
    const int cw = std::max(1, box->w / 2), ch = std::max(1, box->h / 2);
    const Mask core = Mask::box(shape, box->x + (box->w - cw) / 2, box->y + (box->h - ch) / 2, cw, ch);
    const auto seed = region_descriptor(field, core, cfg.exec);
    const BoundingBox win{box->x, box->y, box->w, box->h};
    const auto cos = kernels::cosine_window(field, seed, win, cfg.epsilon, cfg.exec);
    Mask mask(shape.height, shape.width);
    double score_sum = 0.0;
    for (int r = 0; r < win.h; ++r) {
      for (int c = 0; c < win.w; ++c) {
        const double s = cos[static_cast<std::size_t>(r) * win.w + c];
        if (s < cfg.alpha_track) continue;
        mask.set(win.y + r, win.x + c);
        score_sum += s;
      }
    }
    const std::size_t n = mask.count();
    const double score = n > 0 ? std::min(1.0, score_sum / static_cast<double>(n)) : 0.0;
    return {std::move(mask), label, score, -1};
  }

  const auto& click = std::get<ClickInput>(input);
  if (click.x < 0 || click.y < 0 || click.x >= shape.width || click.y >= shape.height) {
    throw RangeError("click outside the frame");
  }
  const auto seed = field.pixel(click.y, click.x);
  const BoundingBox all{0, 0, shape.width, shape.height};
  const auto cos = kernels::cosine_window(field, seed, all, cfg.epsilon, cfg.exec);
  Mask similar(shape.height, shape.width);
  for (std::size_t i = 0; i < cos.size(); ++i) {
    if (cos[i] >= cfg.alpha_track) similar.set(i);
  }
  similar.set(click.y, click.x);
  const LabelMap cc = connected_components(similar, cfg.connectivity, 1);
  const int keep = cc.at(click.y, click.x);
  Mask mask(shape.height, shape.width);
  double score_sum = 0.0;
  for (std::size_t i = 0; i < cc.labels.size(); ++i) {
    if (cc.labels[i] != keep) continue;
    mask.set(i);
    score_sum += std::min(1.0, cos[i]);
  }
  return {std::move(mask), label, score_sum / static_cast<double>(cc.areas[keep - 1]), -1};
}

}  // namespace fan
