#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fan/error.hpp"

namespace fan {

struct Shape {
  int height = 0;
  int width = 0;

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(Shape s);

/// Dense per-pixel descriptor tensor, row-major and pixel-major: the `dim`
/// components of pixel (0,0) come first, then (0,1), ...
///
/// Construction validates the element count and rejects non-finite values,
/// after which the field is immutable.
class DescriptorField {
public:
  DescriptorField(int height, int width, int dim, std::vector<float> data);

  /// Uniform field where every pixel carries `value`.
  static DescriptorField uniform(int height, int width, std::span<const float> value);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int dim() const noexcept { return dim_; }
  Shape shape() const noexcept { return {height_, width_}; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  std::span<const float> pixel(int row, int col) const noexcept {
    return {data_.data() + (static_cast<std::size_t>(row) * width_ + col) * dim_,
            static_cast<std::size_t>(dim_)};
  }
  std::span<const float> pixel(std::size_t index) const noexcept {
    return {data_.data() + index * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const float> data() const noexcept { return data_; }
  /// Moves the storage out so it can be reused; leaves the field empty.
  std::vector<float> release() && noexcept { return std::move(data_); }

  friend bool operator==(const DescriptorField&, const DescriptorField&) = default;

private:
  int height_;
  int width_;
  int dim_;
  std::vector<float> data_;
};

/// Binary per-pixel region. Stored as one byte per pixel, each 0 or 1.
class Mask {
public:
  Mask() = default;
  Mask(int height, int width);
  Mask(int height, int width, std::vector<std::uint8_t> values);

  /// Axis-aligned box rasterization, clipped to the mask bounds.
  static Mask box(Shape shape, int x, int y, int w, int h);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  Shape shape() const noexcept { return {height_, width_}; }
  std::size_t size() const noexcept { return values_.size(); }

  bool at(int row, int col) const noexcept {
    return values_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  bool at(std::size_t index) const noexcept { return values_[index] != 0; }
  void set(int row, int col, bool on = true) noexcept {
    values_[static_cast<std::size_t>(row) * width_ + col] = on ? 1 : 0;
  }
  void set(std::size_t index, bool on = true) noexcept { values_[index] = on ? 1 : 0; }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }

  friend bool operator==(const Mask&, const Mask&) = default;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> values_;
};

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool empty() const noexcept { return w <= 0 || h <= 0; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

BoundingBox bounding_box(const Mask& mask);

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Mean (column, row) index of the set pixels.
PixelPoint centroid(const Mask& mask);

enum class QueryKind { click, region, precomputed };

std::string_view to_string(QueryKind kind);

/// Labeled embedding of a user query. The vector must have positive norm.
class QueryDescriptor {
public:
  QueryDescriptor(std::string label, std::vector<float> vector, QueryKind kind);

  const std::string& label() const noexcept { return label_; }
  std::span<const float> vector() const noexcept { return vector_; }
  QueryKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return static_cast<int>(vector_.size()); }

private:
  std::string label_;
  std::vector<float> vector_;
  QueryKind kind_;
};

/// A region with its best-matching query label (nullopt when unlabeled).
struct LabeledRegion {
  Mask mask;
  std::optional<std::string> label;
  double score = 0.0;
  int query_index = -1;

  bool labeled() const noexcept { return label.has_value(); }
};

struct SimilarityConfig {
  double alpha = 0.35;
  double epsilon = 1e-8;

  void validate() const;
};

/// Cosine similarity with a stabilized denominator, clamped to [-1, 1].
double cosine_similarity(std::span<const float> a, std::span<const float> b,
                         double epsilon = 1e-8);

/// Same as cosine_similarity without the final clamp.
double cosine_similarity_raw(std::span<const float> a, std::span<const float> b,
                             double epsilon = 1e-8);

void validate_shapes(const DescriptorField& field, const Mask& mask);

}  // namespace fan
