#pragma once

#include "fan/providers.hpp"

namespace fan::fixtures {

/// Two-class world (background 0, object class 1) with one disc at the
/// origin, viewed by a 64x48 camera at 0.05 m/px.
inline SceneScript disc_scene(double sigma, double size = 1.0, std::uint64_t seed = 5) {
  SceneScript s;
  s.duration = 10.0;
  s.frame_rate = 20.0;
  s.world_extent = 20.0;
  s.background_class = 0;
  s.classes = {{0, 101, {}, 0.0}, {1, 202, {}, 0.0}, {2, 303, {}, 0.0}};
  s.objects = {{1, 1, ObjectShape::disc, size, {{0.0, 0.0, 0.0}}}};
  s.noise_sigma = sigma;
  s.dim = 32;
  s.seed = seed;
  s.target_object = 1;
  return s;
}

inline CameraModel small_camera(Point2 pose = {0.0, 0.0}) { return {64, 48, 0.05, pose}; }

}  // namespace fan::fixtures
