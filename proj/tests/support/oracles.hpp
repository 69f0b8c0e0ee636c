#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Everything here is written as plain loops, without the library kernels.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "fan/core.hpp"

namespace fan::fixtures {

inline DescriptorField random_field(std::mt19937_64& rng, int h, int w, int d, bool unit = false) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> data(static_cast<std::size_t>(h) * w * d);
  for (auto& x : data) x = g(rng);
  if (unit) {
    for (std::size_t p = 0; p < data.size(); p += d) {
      double n = 0.0;
      for (int k = 0; k < d; ++k) n += double(data[p + k]) * data[p + k];
      n = std::sqrt(n);
      for (int k = 0; k < d; ++k) data[p + k] = float(data[p + k] / n);
    }
  }
  return DescriptorField(h, w, d, std::move(data));
}

inline Mask random_mask(std::mt19937_64& rng, int h, int w, double p) {
  std::bernoulli_distribution on(p);
  Mask m(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) m.set(r, c, on(rng));
  if (m.empty()) m.set(h / 2, w / 2);
  return m;
}

/// Mean descriptor over the mask, long double accumulation.
inline std::vector<long double> brute_region_mean(const DescriptorField& f, const Mask& m) {
  std::vector<long double> sum(f.dim(), 0.0L);
  long double n = 0;
  for (int r = 0; r < f.height(); ++r) {
    for (int c = 0; c < f.width(); ++c) {
      if (!m.at(r, c)) continue;
      auto px = f.pixel(r, c);
      for (int k = 0; k < f.dim(); ++k) sum[k] += px[k];
      n += 1;
    }
  }
  for (auto& s : sum) s /= n;
  return sum;
}

inline double brute_cosine(std::span<const float> a, std::span<const float> b, double eps) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb) + eps);
}

/// Flood fill labeling with an explicit stack. 0 is background.
inline std::vector<int> flood_fill_labels(const Mask& m, int connectivity, int* count = nullptr) {
  const int h = m.height(), w = m.width();
  std::vector<int> lab(static_cast<std::size_t>(h) * w, 0);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!m.at(r, c) || lab[r * w + c]) continue;
      ++next;
      lab[r * w + c] = next;
      stack.push_back({r, c});
      while (!stack.empty()) {
        auto [y, x] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            if (connectivity == 4 && dy != 0 && dx != 0) continue;
            const int ny = y + dy, nx = x + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (!m.at(ny, nx) || lab[ny * w + nx]) continue;
            lab[ny * w + nx] = next;
            stack.push_back({ny, nx});
          }
        }
      }
    }
  }
  if (count) *count = next;
  return lab;
}

/// True when the two labelings differ only by a renaming of the components.
template <class A, class B>
bool same_partition(const std::vector<A>& a, const std::vector<B>& b) {
  if (a.size() != b.size()) return false;
  std::map<long, long> fwd, bwd;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long x = a[i], y = b[i];
    if ((x == 0) != (y == 0)) return false;
    if (x == 0) continue;
    auto [f, fi] = fwd.emplace(x, y);
    auto [g, gi] = bwd.emplace(y, x);
    if (f->second != y || g->second != x) return false;
  }
  return true;
}

inline std::size_t count_and(const Mask& a, const Mask& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a.at(i) && b.at(i);
  return n;
}

inline bool subset_of(const Mask& a, const Mask& b) { return count_and(a, b) == a.count(); }

}  // namespace fan::fixtures
