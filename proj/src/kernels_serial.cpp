#include "fan/kernels.hpp"

namespace fan::kernels {

QueryMatrix QueryMatrix::from(std::span<const QueryDescriptor> queries) {
  if (queries.empty()) throw DimensionError("at least one query is required");
  QueryMatrix m;
  m.count = static_cast<int>(queries.size());
  m.dim = queries.front().dim();
  m.values.reserve(static_cast<std::size_t>(m.count) * m.dim);
  for (const auto& q : queries) {
    if (q.dim() != m.dim) {
      throw DimensionError("query '" + q.label() + "' has dim " + std::to_string(q.dim()) +
                           ", expected " + std::to_string(m.dim));
    }
    m.values.insert(m.values.end(), q.vector().begin(), q.vector().end());
    m.norms.push_back(std::sqrt(detail::dot(q.vector().data(), q.vector().data(), m.dim)));
  }
  return m;
}

QueryMatrix QueryMatrix::from_vector(std::span<const float> vector) {
  QueryMatrix m;
  m.count = 1;
  m.dim = static_cast<int>(vector.size());
  m.values.assign(vector.begin(), vector.end());
  m.norms.push_back(std::sqrt(detail::dot(vector.data(), vector.data(), m.dim)));
  return m;
}

namespace {

void check_dims(const DescriptorField& field, int dim) {
  if (field.dim() != dim) {
    throw DimensionError("query dim " + std::to_string(dim) + " does not match field dim " +
                         std::to_string(field.dim()));
  }
}

}  // namespace

namespace serial {

BestMatch pixel_best_match(const DescriptorField& field, const QueryMatrix& queries,
                           double epsilon) {
  check_dims(field, queries.dim);
  const std::size_t n = field.pixel_count();
  BestMatch out{std::vector<std::int32_t>(n), std::vector<double>(n)};
  const float* base = field.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    detail::best_for_pixel(base + i * field.dim(), queries, epsilon, out.index[i], out.score[i]);
  }
  return out;
}

MaskedSum masked_sum(const DescriptorField& field, const Mask& mask) {
  validate_shapes(field, mask);
  const int d = field.dim();
  MaskedSum out{std::vector<double>(d, 0.0), 0};
  std::vector<double> row_acc(d);
  for (int r = 0; r < field.height(); ++r) {
    std::fill(row_acc.begin(), row_acc.end(), 0.0);
    std::size_t row_count = 0;
    for (int c = 0; c < field.width(); ++c) {
      if (!mask.at(r, c)) continue;
      const auto p = field.pixel(r, c);
      for (int k = 0; k < d; ++k) row_acc[k] += p[k];
      ++row_count;
    }
    if (row_count == 0) continue;
    for (int k = 0; k < d; ++k) out.sum[k] += row_acc[k];
    out.count += row_count;
  }
  return out;
}

std::vector<double> cosine_window(const DescriptorField& field, std::span<const float> vector,
                                  BoundingBox window, double epsilon) {
  check_dims(field, static_cast<int>(vector.size()));
  const double vn = std::sqrt(detail::dot(vector.data(), vector.data(), field.dim()));
  std::vector<double> out(static_cast<std::size_t>(window.w) * window.h);
  for (int r = 0; r < window.h; ++r) {
    for (int c = 0; c < window.w; ++c) {
      const float* p = field.pixel(window.y + r, window.x + c).data();
      const double pn = std::sqrt(detail::dot(p, p, field.dim()));
      out[static_cast<std::size_t>(r) * window.w + c] =
          detail::dot(p, vector.data(), field.dim()) / (pn * vn + epsilon);
    }
  }
  return out;
}

}  // namespace serial

BestMatch pixel_best_match(const DescriptorField& field, const QueryMatrix& queries,
                           double epsilon, Execution exec) {
  return exec == Execution::serial ? serial::pixel_best_match(field, queries, epsilon)
                                   : parallel::pixel_best_match(field, queries, epsilon);
}

MaskedSum masked_sum(const DescriptorField& field, const Mask& mask, Execution exec) {
  return exec == Execution::serial ? serial::masked_sum(field, mask)
                                   : parallel::masked_sum(field, mask);
}

std::vector<double> cosine_window(const DescriptorField& field, std::span<const float> vector,
                                  BoundingBox window, double epsilon, Execution exec) {
  return exec == Execution::serial ? serial::cosine_window(field, vector, window, epsilon)
                                   : parallel::cosine_window(field, vector, window, epsilon);
}

}  // namespace fan::kernels
