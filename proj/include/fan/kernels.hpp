#pragma once

// Data-parallel inner loops shared by detection, tracking and re-detection.
//
// Every kernel exists twice: `serial::` is the reference implementation kept
// for testing and single-thread budgets, `parallel::` is the OpenMP version.
// Both evaluate the same per-pixel arithmetic in the same order, so their
// outputs are bit-identical regardless of thread count.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fan/core.hpp"

namespace fan {

enum class Execution { serial, parallel };

namespace kernels {

/// Query vectors packed row-wise with precomputed norms.
struct QueryMatrix {
  int count = 0;
  int dim = 0;
  std::vector<float> values;
  std::vector<double> norms;

  static QueryMatrix from(std::span<const QueryDescriptor> queries);
  static QueryMatrix from_vector(std::span<const float> vector);

  std::span<const float> row(int k) const noexcept {
    return {values.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
  }
};

/// Per-pixel argmax query and its unclamped cosine score.
struct BestMatch {
  std::vector<std::int32_t> index;
  std::vector<double> score;
};

struct MaskedSum {
  std::vector<double> sum;
  std::size_t count = 0;
};

namespace detail {

inline double dot(const float* a, const float* b, int n) noexcept {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

inline void best_for_pixel(const float* p, const QueryMatrix& q, double epsilon,
                           std::int32_t& best_index, double& best_score) noexcept {
  const double pn = std::sqrt(dot(p, p, q.dim));
  best_index = 0;
  best_score = dot(p, q.values.data(), q.dim) / (pn * q.norms[0] + epsilon);
  for (int k = 1; k < q.count; ++k) {
    const double s = dot(p, q.values.data() + static_cast<std::size_t>(k) * q.dim, q.dim) /
                     (pn * q.norms[k] + epsilon);
    if (s > best_score) {
      best_score = s;
      best_index = k;
    }
  }
}

}  // namespace detail

namespace serial {

BestMatch pixel_best_match(const DescriptorField& field, const QueryMatrix& queries,
                           double epsilon);
MaskedSum masked_sum(const DescriptorField& field, const Mask& mask);
std::vector<double> cosine_window(const DescriptorField& field, std::span<const float> vector,
                                  BoundingBox window, double epsilon);

}  // namespace serial

namespace parallel {

BestMatch pixel_best_match(const DescriptorField& field, const QueryMatrix& queries,
                           double epsilon);
MaskedSum masked_sum(const DescriptorField& field, const Mask& mask);
std::vector<double> cosine_window(const DescriptorField& field, std::span<const float> vector,
                                  BoundingBox window, double epsilon);

}  // namespace parallel

BestMatch pixel_best_match(const DescriptorField& field, const QueryMatrix& queries,
                           double epsilon, Execution exec = Execution::parallel);
MaskedSum masked_sum(const DescriptorField& field, const Mask& mask,
                     Execution exec = Execution::parallel);
std::vector<double> cosine_window(const DescriptorField& field, std::span<const float> vector,
                                  BoundingBox window, double epsilon,
                                  Execution exec = Execution::parallel);

/// Threads the parallel kernels will use (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace kernels
}  // namespace fan
