#include "fan/tracking.hpp"

#include <algorithm>
#include <cmath>

#include "fan/components.hpp"
#include "fan/detection.hpp"

namespace fan {

void TrackerConfig::validate() const {
  if (!(search_inflation >= 1.0)) throw ConfigError("search_inflation must be >= 1");
  if (!(alpha_track >= -1.0 && alpha_track <= 1.0)) throw ConfigError("alpha_track must lie in [-1, 1]");
  if (!(template_blend >= 0.0 && template_blend <= 1.0)) {
    throw ConfigError("template_blend must lie in [0, 1]");
  }
  if (loss_patience < 1) throw ConfigError("loss_patience must be at least 1");
  if (min_area < 1) throw ConfigError("tracker min_area must be at least 1");
}

TrackState init_track(const LabeledRegion& detection, const DescriptorField& field,
                      const TrackerConfig& cfg) {
  validate_shapes(field, detection.mask);
  if (detection.mask.empty()) throw EmptyRegionError("cannot track an empty detection");
  TrackState s;
  s.templ = region_descriptor(field, detection.mask, cfg.exec);
  s.last_mask = detection.mask;
  s.last_centroid = centroid(detection.mask);
  s.frames_since_seen = 0;
  s.status = TrackStatus::active;
  return s;
}

BoundingBox search_window(const Mask& last_mask, double inflation) {
  const BoundingBox b = bounding_box(last_mask);
  if (b.empty()) return {0, 0, last_mask.width(), last_mask.height()};
  const double cx = b.x + b.w / 2.0, cy = b.y + b.h / 2.0;
  const double hw = b.w * inflation / 2.0, hh = b.h * inflation / 2.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - hw)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - hh)));
  const int x1 = std::min(last_mask.width(), static_cast<int>(std::ceil(cx + hw)));
  const int y1 = std::min(last_mask.height(), static_cast<int>(std::ceil(cy + hh)));
  return {x0, y0, x1 - x0, y1 - y0};
}

TrackStep step_track(const TrackState& state, const DescriptorField& field,
                     const TrackerConfig& cfg, double inflation_override) {
  validate_shapes(field, state.last_mask);
  const double inflation = inflation_override > 0.0 ? inflation_override : cfg.search_inflation;
  const BoundingBox win = search_window(state.last_mask, inflation);

  const auto cos = kernels::cosine_window(field, state.templ, win, cfg.epsilon, cfg.exec);
  Mask local(win.h, win.w);
  for (std::size_t i = 0; i < cos.size(); ++i) {
    if (cos[i] >= cfg.alpha_track) local.set(i);
  }
  const LabelMap cc = connected_components(local, cfg.connectivity, cfg.min_area);

  TrackStep out{state, Mask(field.height(), field.width())};
  if (cc.count == 0) {
    out.state.frames_since_seen += 1;
    if (out.state.frames_since_seen > cfg.loss_patience) out.state.status = TrackStatus::lost;
    return out;
  }
  // Largest component; earliest wins ties.
  const auto largest = std::max_element(cc.areas.begin(), cc.areas.end()) - cc.areas.begin();
  const int keep = static_cast<int>(largest) + 1;
  for (int r = 0; r < win.h; ++r) {
    for (int c = 0; c < win.w; ++c) {
      if (cc.at(r, c) == keep) out.mask.set(win.y + r, win.x + c);
    }
  }

  const auto fresh = region_descriptor(field, out.mask, cfg.exec);
  const double mu = cfg.template_blend;
  if (mu > 0.0) {
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      out.state.templ[k] = static_cast<float>((1.0 - mu) * out.state.templ[k] + mu * fresh[k]);
    }
  }
  out.state.last_mask = out.mask;
  out.state.last_centroid = centroid(out.mask);
  out.state.frames_since_seen = 0;
  out.state.status = TrackStatus::active;
  return out;
}

bool is_lost(const TrackState& state) noexcept { return state.status == TrackStatus::lost; }

}  // namespace fan
