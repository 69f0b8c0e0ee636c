#include "fan/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace fan {

std::string to_string(Shape s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width);
}

DescriptorField::DescriptorField(int height, int width, int dim, std::vector<float> data)
    : height_(height), width_(width), dim_(dim), data_(std::move(data)) {
  if (height < 1 || width < 1 || dim < 1) {
    throw DimensionError("descriptor field dimensions must be positive, got " +
                         std::to_string(height) + "x" + std::to_string(width) + "x" +
                         std::to_string(dim));
  }
  const std::size_t expected = static_cast<std::size_t>(height) * width * dim;
  if (data_.size() != expected) {
    throw DimensionError("descriptor field expects " + std::to_string(expected) +
                         " elements, got " + std::to_string(data_.size()));
  }
  // Exponent bits all set marks inf or NaN.
  std::uint32_t any = 0;
  for (float v : data_) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    any |= static_cast<std::uint32_t>((bits & 0x7F800000u) == 0x7F800000u);
  }
  if (any) {
    const auto bad = std::find_if(data_.begin(), data_.end(),
                                  [](float v) { return !std::isfinite(v); });
    throw DimensionError("descriptor field contains a non-finite value at element " +
                         std::to_string(bad - data_.begin()));
  }
}

DescriptorField DescriptorField::uniform(int height, int width, std::span<const float> value) {
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(height) * width * value.size());
  for (int i = 0; i < height * width; ++i) data.insert(data.end(), value.begin(), value.end());
  return {height, width, static_cast<int>(value.size()), std::move(data)};
}

Mask::Mask(int height, int width)
    : height_(height), width_(width),
      values_(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0), 0) {
  if (height < 0 || width < 0) throw ShapeError("mask dimensions must be non-negative");
}

Mask::Mask(int height, int width, std::vector<std::uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height < 0 || width < 0) throw ShapeError("mask dimensions must be non-negative");
  if (values_.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("mask payload size does not match " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  for (auto& v : values_) {
    if (v > 1) throw ShapeError("mask values must be 0 or 1");
  }
}

Mask Mask::box(Shape shape, int x, int y, int w, int h) {
  Mask m(shape.height, shape.width);
  const int r0 = std::max(y, 0), r1 = std::min(y + h, shape.height);
  const int c0 = std::max(x, 0), c1 = std::min(x + w, shape.width);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) m.set(r, c);
  return m;
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

BoundingBox bounding_box(const Mask& mask) {
  int r0 = mask.height(), r1 = -1, c0 = mask.width(), c1 = -1;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(r, c)) continue;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
    }
  }
  if (r1 < 0) return {};
  return {c0, r0, c1 - c0 + 1, r1 - r0 + 1};
}

PixelPoint centroid(const Mask& mask) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(r, c)) continue;
      sx += c;
      sy += r;
      ++n;
    }
  }
  if (n == 0) throw EmptyRegionError("centroid of an empty mask");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

std::string_view to_string(QueryKind kind) {
  switch (kind) {
    case QueryKind::click: return "click";
    case QueryKind::region: return "region";
    case QueryKind::precomputed: return "precomputed";
  }
  return "unknown";
}

QueryDescriptor::QueryDescriptor(std::string label, std::vector<float> vector, QueryKind kind)
    : label_(std::move(label)), vector_(std::move(vector)), kind_(kind) {
  if (vector_.empty()) throw DimensionError("query '" + label_ + "' has an empty vector");
  double sq = 0.0;
  for (float v : vector_) {
    if (!std::isfinite(v)) throw DimensionError("query '" + label_ + "' is not finite");
    sq += static_cast<double>(v) * v;
  }
  if (!(sq > 0.0)) throw DimensionError("query '" + label_ + "' has zero norm");
}

void SimilarityConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
    throw ConfigError("similarity epsilon must lie in (0, 1e-3]");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("similarity alpha must lie in [0, 1]");
}

double cosine_similarity_raw(std::span<const float> a, std::span<const float> b, double epsilon) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine of vectors with lengths " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  }
  if (a.empty()) throw DimensionError("cosine of zero-length vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb) + epsilon);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b, double epsilon) {
  return std::clamp(cosine_similarity_raw(a, b, epsilon), -1.0, 1.0);
}

void validate_shapes(const DescriptorField& field, const Mask& mask) {
  if (field.shape() != mask.shape()) {
    throw ShapeError("mask shape " + to_string(mask.shape()) +
                     " does not match descriptor field shape " + to_string(field.shape()));
  }
}

}  // namespace fan
