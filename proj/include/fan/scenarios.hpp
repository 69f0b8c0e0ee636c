#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fan/providers.hpp"

namespace fan::scenarios {

/// Class ids used by the built-in scenes.
inline constexpr int kBackground = 0;
inline constexpr int kTargetClass = 1;
inline constexpr int kOtherClass = 2;
inline constexpr int kDecoyClass = 3;
inline constexpr int kTargetObject = 1;

/// Target circling at 0.2 m/s (radius 4 m) among static objects of other
/// classes.
SceneScript following(std::uint64_t seed, double duration = 240.0);

/// Target crossing the world at 0.2 m/s; an occluder hides it completely
/// for t in [30, 35] s.
SceneScript tunnel(std::uint64_t seed);
inline constexpr double kTunnelOcclusionStart = 30.0;
inline constexpr double kTunnelOcclusionEnd = 35.0;

/// 200-frame fixed-camera sequence: the target crosses the view and leaves
/// it near the end; a decoy of a similar class and an unrelated object move
/// alongside. Rendered with `feature_stride` 4 by default.
SceneScript detection_sequence(std::uint64_t seed, int feature_stride = 4);
inline constexpr int kDetectionFrames = 200;

/// Stationary target at the world origin.
SceneScript stationary(std::uint64_t seed, double duration = 20.0);

std::vector<std::string> names();
/// Looks up a preset by name; throws ConfigError for unknown names.
SceneScript by_name(std::string_view name, std::uint64_t seed);

}  // namespace fan::scenarios
