#include <random>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "fan/components.hpp"

using namespace fan;

TEST(Components, AllZero) {
  const auto lm = connected_components(Mask(6, 6), 8);
  EXPECT_EQ(lm.count, 0);
  EXPECT_TRUE(lm.areas.empty());
}

TEST(Components, DiagonalNeighbours) {
  Mask m(3, 3);
  m.set(0, 0);
  m.set(1, 1);
  EXPECT_EQ(connected_components(m, 4).count, 2);
  EXPECT_EQ(connected_components(m, 8).count, 1);
}

TEST(Components, FirstEncounterOrderAndAreas) {
  Mask m(3, 5);
  m.set(0, 3);
  m.set(0, 4);
  m.set(2, 0);
  const auto lm = connected_components(m, 4);
  ASSERT_EQ(lm.count, 2);
  EXPECT_EQ(lm.at(0, 3), 1);
  EXPECT_EQ(lm.at(2, 0), 2);
  EXPECT_EQ(lm.areas, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(lm.component(1).count(), 2u);
}

TEST(Components, UShapeMergesLate) {
  // Both arms meet only on the last row; union-find must merge them.
  Mask m(4, 5);
  for (int r = 0; r < 4; ++r) m.set(r, 0), m.set(r, 4);
  for (int c = 0; c < 5; ++c) m.set(3, c);
  const auto lm = connected_components(m, 4);
  EXPECT_EQ(lm.count, 1);
  EXPECT_EQ(lm.areas[0], m.count());
}

TEST(Components, MinAreaFoldsSmallComponents) {
  Mask m(5, 5);
  m.set(0, 0);
  for (int r = 2; r < 5; ++r)
    for (int c = 2; c < 5; ++c) m.set(r, c);
  const auto lm = connected_components(m, 8, 9);
  ASSERT_EQ(lm.count, 1);
  EXPECT_EQ(lm.at(0, 0), 0);
  EXPECT_EQ(lm.at(4, 4), 1);
  EXPECT_EQ(lm.areas[0], 9u);
}

TEST(Components, BadConnectivity) { EXPECT_THROW(connected_components(Mask(2, 2), 6), ConfigError); }

TEST(Components, MatchesFloodFillProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> p(0.05, 0.95);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int t = 0; t < 300; ++t) {
    const Mask m = fixtures::random_mask(rng, dim(rng), dim(rng), p(rng));
    for (int conn : {4, 8}) {
      int count = 0;
      const auto oracle = fixtures::flood_fill_labels(m, conn, &count);
      const auto lm = connected_components(m, conn);
      ASSERT_EQ(lm.count, count);
      ASSERT_TRUE(fixtures::same_partition(lm.labels, oracle));
      // Labels run in first-encounter order, so they match the flood fill exactly.
      for (std::size_t i = 0; i < oracle.size(); ++i) ASSERT_EQ(lm.labels[i], oracle[i]);
    }
  }
}

TEST(Components, EightConnectivityNeverSplitsMoreProperty) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    const Mask m = fixtures::random_mask(rng, 30, 30, 0.45);
    EXPECT_LE(connected_components(m, 8).count, connected_components(m, 4).count);
  }
}
