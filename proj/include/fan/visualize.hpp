#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fan/core.hpp"

namespace fan {

/// 8-bit RGB image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* px(int row, int col) {
    return rgb.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }
  const std::uint8_t* px(int row, int col) const {
    return rgb.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }
};

/// False-colour view of a descriptor field: each pixel is projected onto
/// three fixed directions.
Image visualize_field(const DescriptorField& field);

/// Tints each region and outlines its bounding box.
void overlay_regions(Image& image, std::span<const LabeledRegion> regions);

std::vector<std::byte> encode_png(const Image& image);
/// Reads back 8-bit RGB, non-interlaced PNGs as written by encode_png.
Image decode_png(std::span<const std::byte> bytes);

}  // namespace fan
