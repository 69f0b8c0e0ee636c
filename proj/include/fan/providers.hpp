#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fan/core.hpp"

namespace fan {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

enum class ObjectShape { disc, rect };

struct Waypoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// A scripted object. `size` is the disc diameter or the square side, meters.
struct SceneObject {
  int id = 0;
  int class_id = 0;
  ObjectShape shape = ObjectShape::disc;
  double size = 1.0;
  std::vector<Waypoint> waypoints;
};

struct WorldRect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(double x, double y) const noexcept {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

struct Occluder {
  WorldRect rect;
  double t0 = 0.0;
  double t1 = 0.0;

  bool active(double t) const noexcept { return t >= t0 && t <= t1; }
};

/// A class whose base vector is drawn from `seed`. When `similar_to` is set
/// the base vector is built with cosine `similarity` to that class instead
/// (used for decoys).
struct ClassSpec {
  int id = 0;
  std::uint64_t seed = 0;
  std::optional<int> similar_to;
  double similarity = 0.0;
};

struct SceneScript {
  double duration = 10.0;
  double frame_rate = 20.0;
  double world_extent = 40.0;
  int background_class = 0;
  std::vector<ClassSpec> classes;
  std::vector<SceneObject> objects;
  std::vector<Occluder> occluders;
  double noise_sigma = 0.0;
  int dim = 32;
  std::uint64_t seed = 0;
  /// Side of the square pixel cell sharing one descriptor (one mixed base
  /// vector and one noise draw).
  /// 1 renders sharp class boundaries; larger values blur boundaries the way
  /// patch-based feature extractors do.
  int feature_stride = 1;
  std::optional<int> occluder_class;
  std::optional<int> target_object;

  void validate() const;
  const SceneObject& object(int id) const;
};

SceneScript scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneScript& scene);
SceneScript load_scene(const std::filesystem::path& path);

/// Linear interpolation along the waypoints, held constant past either end.
Point2 object_position(const SceneObject& object, double t);

/// Downward-looking orthographic camera centred on `pose`. Pixel (col, row)
/// images the world point pose + ((col - w/2), (row - h/2)) * scale.
struct CameraModel {
  int view_width = 320;
  int view_height = 240;
  double scale = 0.02;
  Point2 pose;

  Point2 pixel_to_world(double col, double row) const noexcept {
    return {pose.x + (col - view_width / 2) * scale, pose.y + (row - view_height / 2) * scale};
  }
  Point2 world_to_pixel(Point2 p) const noexcept {
    return {(p.x - pose.x) / scale + view_width / 2, (p.y - pose.y) / scale + view_height / 2};
  }
};

struct GroundTruthObject {
  int object_id = 0;
  int class_id = 0;
  Mask mask;
};

struct GroundTruth {
  std::vector<GroundTruthObject> objects;

  const GroundTruthObject* find(int object_id) const noexcept;
};

struct RenderedFrame {
  DescriptorField field;
  GroundTruth truth;
};

/// Renders descriptor fields for a scene. Holds the class base vectors and a
/// seeded Gaussian noise bank; read-only after construction.
class SceneRenderer {
public:
  explicit SceneRenderer(SceneScript scene);

  RenderedFrame render(double t, const CameraModel& camera) const;
  /// Same, reusing `storage` (e.g. from DescriptorField::release) for the
  /// descriptor payload.
  RenderedFrame render(double t, const CameraModel& camera, std::vector<float> storage) const;

  const SceneScript& scene() const noexcept { return scene_; }
  std::span<const float> class_base(int class_id) const;
  int occluder_class_id() const noexcept { return occluder_class_; }
  std::vector<int> class_ids() const;

private:
  struct ClassEntry {
    int id;
    std::vector<float> base;
  };

  const ClassEntry& entry(int class_id) const;
  std::size_t class_slot(int class_id) const;

  SceneScript scene_;
  std::vector<ClassEntry> classes_;
  int occluder_class_ = 0;
  std::vector<float> noise_bank_;
};

RenderedFrame render_frame(const SceneScript& scene, double t, const CameraModel& camera);

QueryDescriptor query_from_click(const DescriptorField& field, int x, int y, std::string label);
QueryDescriptor query_from_region(const DescriptorField& field, const Mask& mask,
                                  std::string label);

/// Query set with a designated target label, as stored in query files.
struct QuerySet {
  std::vector<QueryDescriptor> queries;
  std::string target;
};

QuerySet queries_from_json(const nlohmann::json& j);
nlohmann::json queries_to_json(const QuerySet& set);
QuerySet load_queries(const std::filesystem::path& path);

}  // namespace fan
