#pragma once

#include <cstdint>
#include <vector>

#include "fan/core.hpp"

namespace fan {

/// Per-pixel component ids: 0 is background, 1..count are components in
/// first-encounter row-major order.
struct LabelMap {
  int height = 0;
  int width = 0;
  int count = 0;
  std::vector<std::int32_t> labels;
  std::vector<std::size_t> areas;  // areas[l - 1] is the area of component l

  std::int32_t at(int row, int col) const noexcept {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
  Mask component(int label) const;
};

/// Two-pass union-find labeling of the 1-pixels of `binary` under 4- or
/// 8-connectivity. Components smaller than `min_area` are folded into the
/// background and the survivors renumbered contiguously.
LabelMap connected_components(const Mask& binary, int connectivity, std::size_t min_area = 1);

}  // namespace fan
