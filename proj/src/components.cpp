#include "fan/components.hpp"

#include <numeric>

namespace fan {
namespace {

class DisjointSet {
public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }
  std::int32_t find(std::int32_t x) {
    std::int32_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::int32_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }
  // Keeps the smaller id as root so roots follow first-encounter order.
  std::int32_t unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return a;
  }
  std::size_t size() const noexcept { return parent_.size(); }

private:
  std::vector<std::int32_t> parent_;
};

}  // namespace

Mask LabelMap::component(int label) const {
  Mask m(height, width);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) m.set(i);
  }
  return m;
}

LabelMap connected_components(const Mask& binary, int connectivity, std::size_t min_area) {
  if (connectivity != 4 && connectivity != 8) {
    throw ConfigError("connectivity must be 4 or 8, got " + std::to_string(connectivity));
  }
  const int h = binary.height(), w = binary.width();
  LabelMap out{h, w, 0, std::vector<std::int32_t>(binary.size(), -1), {}};

  // First pass: provisional labels with equivalences. -1 marks background.
  DisjointSet sets;
  auto& lab = out.labels;
  auto at = [&](int r, int c) -> std::int32_t {
    if (r < 0 || c < 0 || c >= w) return -1;
    return lab[static_cast<std::size_t>(r) * w + c];
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!binary.at(r, c)) continue;
      std::int32_t current = -1;
      auto merge = [&](std::int32_t n) {
        if (n < 0) return;
        current = current < 0 ? sets.find(n) : sets.unite(current, n);
      };
      merge(at(r, c - 1));
      merge(at(r - 1, c));
      if (connectivity == 8) {
        merge(at(r - 1, c - 1));
        merge(at(r - 1, c + 1));
      }
      lab[static_cast<std::size_t>(r) * w + c] = current < 0 ? sets.make() : current;
    }
  }

  // Second pass: resolve roots, measure areas, renumber survivors.
  std::vector<std::size_t> root_area(sets.size(), 0);
  for (auto& l : lab) {
    if (l < 0) continue;
    l = sets.find(l);
    ++root_area[l];
  }
  std::vector<std::int32_t> final_id(sets.size(), 0);
  for (std::size_t i = 0; i < lab.size(); ++i) {
    const std::int32_t root = lab[i];
    if (root < 0) {
      lab[i] = 0;
      continue;
    }
    if (final_id[root] == 0 && root_area[root] >= min_area) {
      final_id[root] = ++out.count;
      out.areas.push_back(root_area[root]);
    }
    lab[i] = root_area[root] >= min_area ? final_id[root] : 0;
  }
  return out;
}

}  // namespace fan
