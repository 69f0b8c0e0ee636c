#include "fan/kernels.hpp"

#ifdef FAN_HAVE_OPENMP
#include <omp.h>
#endif

namespace fan::kernels {

int max_threads() {
#ifdef FAN_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef FAN_HAVE_OPENMP
  omp_set_num_threads(n < 1 ? 1 : n);
#else
  (void)n;
#endif
}

namespace parallel {

BestMatch pixel_best_match(const DescriptorField& field, const QueryMatrix& queries,
                           double epsilon) {
  if (field.dim() != queries.dim) {
    throw DimensionError("query dim " + std::to_string(queries.dim) +
                         " does not match field dim " + std::to_string(field.dim()));
  }
  const auto n = static_cast<std::int64_t>(field.pixel_count());
  BestMatch out{std::vector<std::int32_t>(n), std::vector<double>(n)};
  const float* base = field.data().data();
  const int d = field.dim();

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    detail::best_for_pixel(base + i * d, queries, epsilon, out.index[i], out.score[i]);
  }
  return out;
}

MaskedSum masked_sum(const DescriptorField& field, const Mask& mask) {
  validate_shapes(field, mask);
  const int d = field.dim();
  const int h = field.height();
  // Row partials are reduced in row order afterwards, matching serial::masked_sum.
  std::vector<double> rows(static_cast<std::size_t>(h) * d, 0.0);
  std::vector<std::size_t> counts(h, 0);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r) {
    double* acc = rows.data() + static_cast<std::size_t>(r) * d;
    std::size_t row_count = 0;
    for (int c = 0; c < field.width(); ++c) {
      if (!mask.at(r, c)) continue;
      const auto p = field.pixel(r, c);
      for (int k = 0; k < d; ++k) acc[k] += p[k];
      ++row_count;
    }
    counts[r] = row_count;
  }

  MaskedSum out{std::vector<double>(d, 0.0), 0};
  for (int r = 0; r < h; ++r) {
    if (counts[r] == 0) continue;
    const double* acc = rows.data() + static_cast<std::size_t>(r) * d;
    for (int k = 0; k < d; ++k) out.sum[k] += acc[k];
    out.count += counts[r];
  }
  return out;
}

std::vector<double> cosine_window(const DescriptorField& field, std::span<const float> vector,
                                  BoundingBox window, double epsilon) {
  if (field.dim() != static_cast<int>(vector.size())) {
    throw DimensionError("template dim does not match field dim");
  }
  const int d = field.dim();
  const double vn = std::sqrt(detail::dot(vector.data(), vector.data(), d));
  std::vector<double> out(static_cast<std::size_t>(window.w) * window.h);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < window.h; ++r) {
    for (int c = 0; c < window.w; ++c) {
      const float* p = field.pixel(window.y + r, window.x + c).data();
      const double pn = std::sqrt(detail::dot(p, p, d));
      out[static_cast<std::size_t>(r) * window.w + c] =
          detail::dot(p, vector.data(), d) / (pn * vn + epsilon);
    }
  }
  return out;
}

}  // namespace parallel
}  // namespace fan::kernels
