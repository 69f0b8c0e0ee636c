#pragma once

#include <vector>

#include "fan/core.hpp"
#include "fan/kernels.hpp"

namespace fan {

enum class TrackStatus { active, lost };

struct TrackerConfig {
  double search_inflation = 2.0;
  double alpha_track = 0.5;
  double template_blend = 0.05;
  int loss_patience = 5;
  std::size_t min_area = 9;
  int connectivity = 8;
  double epsilon = 1e-8;
  Execution exec = Execution::parallel;

  void validate() const;
};

struct TrackState {
  std::vector<float> templ;
  Mask last_mask;
  PixelPoint last_centroid;
  int frames_since_seen = 0;
  TrackStatus status = TrackStatus::active;
};

struct TrackStep {
  TrackState state;
  Mask mask;  // empty when the object was not matched this frame
  bool matched() const noexcept { return !mask.empty(); }
};

TrackState init_track(const LabeledRegion& detection, const DescriptorField& field,
                      const TrackerConfig& cfg);

/// Search window: the last bounding box scaled by `inflation` about its
/// centre, clipped to the frame.
BoundingBox search_window(const Mask& last_mask, double inflation);

/// One correlation step: threshold the cosine to the template inside the
/// search window and keep the largest component of at least min_area pixels.
/// `inflation_override` widens the window (used by tracker-led recovery).
TrackStep step_track(const TrackState& state, const DescriptorField& field,
                     const TrackerConfig& cfg, double inflation_override = 0.0);

bool is_lost(const TrackState& state) noexcept;

}  // namespace fan
