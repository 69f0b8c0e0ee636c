#include "fan/scenarios.hpp"

#include <cmath>
#include <numbers>

namespace fan::scenarios {

namespace {

std::vector<ClassSpec> classes(std::uint64_t seed, double decoy_similarity) {
  const std::uint64_t base = seed * 1000;
  return {{kBackground, base + 11, {}, 0.0},
          {kTargetClass, base + 23, {}, 0.0},
          {kOtherClass, base + 37, {}, 0.0},
          {kDecoyClass, base + 41, kTargetClass, decoy_similarity}};
}

SceneScript base_scene(std::uint64_t seed, double duration) {
  SceneScript s;
  s.duration = duration;
  s.frame_rate = 20.0;
  s.world_extent = 40.0;
  s.background_class = kBackground;
  s.classes = classes(seed, 0.3);
  s.noise_sigma = 0.1;
  s.dim = 32;
  s.seed = seed;
  s.feature_stride = 1;
  s.target_object = kTargetObject;
  return s;
}

SceneObject still(int id, int class_id, ObjectShape shape, double size, double x, double y) {
  return {id, class_id, shape, size, {{0.0, x, y}}};
}

}  // namespace

SceneScript following(std::uint64_t seed, double duration) {
  SceneScript s = base_scene(seed, duration);
  constexpr double radius = 4.0;
  constexpr double speed = 0.2;
  const double omega = speed / radius;
  SceneObject target{kTargetObject, kTargetClass, ObjectShape::disc, 1.0, {}};
  for (double t = 0.0;; t += 1.0) {
    const double a = omega * std::min(t, duration);
    target.waypoints.push_back({std::min(t, duration), radius * std::cos(a), radius * std::sin(a)});
    if (t >= duration) break;
  }
  s.objects.push_back(std::move(target));
  s.objects.push_back(still(2, kOtherClass, ObjectShape::rect, 1.2, 7.0, 1.0));
  s.objects.push_back(still(3, kDecoyClass, ObjectShape::disc, 0.8, -1.0, -7.5));
  s.objects.push_back(still(4, kOtherClass, ObjectShape::disc, 0.9, 0.0, 0.0));
  return s;
}

SceneScript tunnel(std::uint64_t seed) {
  SceneScript s = base_scene(seed, 60.0);
  s.objects.push_back({kTargetObject, kTargetClass, ObjectShape::disc, 1.0, {{0.0, -6.0, 0.0}, {60.0, 6.0, 0.0}}});
  s.objects.push_back(still(2, kOtherClass, ObjectShape::rect, 1.0, -2.0, 1.8));
  s.objects.push_back(still(3, kDecoyClass, ObjectShape::disc, 0.8, 3.0, -1.8));
  // Target spans x in [-0.5, 1.5] while the occluder is up.
  s.occluders.push_back({{-0.9, -0.9, 1.9, 0.9}, kTunnelOcclusionStart, kTunnelOcclusionEnd});
  return s;
}

SceneScript detection_sequence(std::uint64_t seed, int feature_stride) {
  SceneScript s = base_scene(seed, (kDetectionFrames - 1) / 20.0);
  s.classes = classes(seed, 0.45);
  s.feature_stride = feature_stride;
  s.objects.push_back({kTargetObject, kTargetClass, ObjectShape::disc, 0.8,
                       {{0.0, -2.2, -0.8}, {7.0, 2.2, 0.6}, {9.95, 5.0, 0.6}}});
  s.objects.push_back({2, kDecoyClass, ObjectShape::disc, 0.8, {{0.0, 2.2, 1.3}, {9.95, -2.2, 1.3}}});
  s.objects.push_back({3, kOtherClass, ObjectShape::rect, 0.7, {{0.0, -2.0, 1.6}, {9.95, 2.0, -1.6}}});
  return s;
}

SceneScript stationary(std::uint64_t seed, double duration) {
  SceneScript s = base_scene(seed, duration);
  s.objects.push_back(still(kTargetObject, kTargetClass, ObjectShape::disc, 1.0, 0.0, 0.0));
  s.objects.push_back(still(2, kOtherClass, ObjectShape::rect, 1.0, 2.2, 1.4));
  return s;
}

std::vector<std::string> names() { return {"following", "tunnel", "detection", "stationary"}; }

SceneScript by_name(std::string_view name, std::uint64_t seed) {
  if (name == "following") return following(seed);
  if (name == "tunnel") return tunnel(seed);
  if (name == "detection") return detection_sequence(seed);
  if (name == "stationary") return stationary(seed);
  throw ConfigError("unknown scene preset '" + std::string(name) + "'");
}

}  // namespace fan::scenarios
