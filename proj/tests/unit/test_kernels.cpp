#include <random>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "fan/kernels.hpp"

using namespace fan;

namespace {

std::vector<QueryDescriptor> random_queries(std::mt19937_64& rng, int m, int d) {
  const auto f = fixtures::random_field(rng, 1, m, d);
  std::vector<QueryDescriptor> qs;
  for (int i = 0; i < m; ++i) {
    qs.emplace_back("q" + std::to_string(i),
                    std::vector<float>(f.pixel(0, i).begin(), f.pixel(0, i).end()),
                    QueryKind::precomputed);
  }
  return qs;
}

class ThreadCount : public ::testing::TestWithParam<int> {
protected:
  void SetUp() override {
    before_ = kernels::max_threads();
    kernels::set_threads(GetParam());
  }
  void TearDown() override { kernels::set_threads(before_); }
  int before_ = 1;
};

}  // namespace

TEST_P(ThreadCount, SerialAndParallelBitIdentical) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto field = fixtures::random_field(rng, 37, 53, 32);
    const auto qs = random_queries(rng, 4, 32);
    const auto qm = kernels::QueryMatrix::from(qs);
    const auto a = kernels::serial::pixel_best_match(field, qm, 1e-8);
    const auto b = kernels::parallel::pixel_best_match(field, qm, 1e-8);
    EXPECT_EQ(a.index, b.index);
    EXPECT_EQ(a.score, b.score);

    const Mask m = fixtures::random_mask(rng, 37, 53, 0.4);
    const auto s1 = kernels::serial::masked_sum(field, m);
    const auto s2 = kernels::parallel::masked_sum(field, m);
    EXPECT_EQ(s1.count, s2.count);
    EXPECT_EQ(s1.sum, s2.sum);

    const BoundingBox win{5, 3, 30, 20};
    EXPECT_EQ(kernels::serial::cosine_window(field, qs[0].vector(), win, 1e-8),
              kernels::parallel::cosine_window(field, qs[0].vector(), win, 1e-8));
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, ThreadCount, ::testing::Values(1, 2, 4));

TEST(Kernels, BestMatchAgainstOracle) {
  std::mt19937_64 rng(8);
  const auto field = fixtures::random_field(rng, 8, 9, 16);
  const auto qs = random_queries(rng, 3, 16);
  const auto bm = kernels::pixel_best_match(field, kernels::QueryMatrix::from(qs), 1e-8);
  for (std::size_t i = 0; i < field.pixel_count(); ++i) {
    int best = 0;
    double score = fixtures::brute_cosine(field.pixel(i), qs[0].vector(), 1e-8);
    for (int k = 1; k < 3; ++k) {
      const double s = fixtures::brute_cosine(field.pixel(i), qs[k].vector(), 1e-8);
      if (s > score) score = s, best = k;
    }
    EXPECT_EQ(bm.index[i], best);
    EXPECT_NEAR(bm.score[i], score, 1e-12);
  }
}

TEST(Kernels, TiesGoToLowerIndex) {
  const std::vector<float> v{1.0f, 0.0f};
  const auto field = DescriptorField::uniform(2, 2, v);
  std::vector<QueryDescriptor> qs{{"a", {1.0f, 1.0f}, QueryKind::click},
                                  {"b", {1.0f, -1.0f}, QueryKind::click}};
  const auto bm = kernels::pixel_best_match(field, kernels::QueryMatrix::from(qs), 1e-8);
  for (auto i : bm.index) EXPECT_EQ(i, 0);
}

TEST(Kernels, CosineWindowCoversOnlyTheWindow) {
  std::mt19937_64 rng(9);
  const auto field = fixtures::random_field(rng, 10, 12, 4);
  const std::vector<float> q{1, 0, 0, 0};
  const auto w = kernels::cosine_window(field, q, {2, 3, 4, 5}, 1e-8);
  ASSERT_EQ(w.size(), 20u);
  EXPECT_NEAR(w[0], fixtures::brute_cosine(field.pixel(3, 2), q, 1e-8), 1e-12);
  EXPECT_NEAR(w[19], fixtures::brute_cosine(field.pixel(7, 5), q, 1e-8), 1e-12);
}

TEST(Kernels, DimensionMismatch) {
  const std::vector<float> v{1.0f, 0.0f};
  const auto field = DescriptorField::uniform(2, 2, v);
  const std::vector<float> q{1.0f, 0.0f, 0.0f};
  EXPECT_THROW(kernels::pixel_best_match(field, kernels::QueryMatrix::from_vector(q), 1e-8),
               DimensionError);
}
