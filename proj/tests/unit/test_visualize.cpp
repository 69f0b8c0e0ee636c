#include <random>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "fan/visualize.hpp"

using namespace fan;

TEST(Png, RoundTrip) {
  std::mt19937_64 rng(1);
  for (auto [w, h] : {std::pair{1, 1}, {7, 3}, {64, 48}}) {
    Image img(w, h);
    for (auto& v : img.rgb) v = std::uint8_t(rng());
    const auto bytes = encode_png(img);
    EXPECT_EQ(bytes[1], std::byte('P'));
    const auto back = decode_png(bytes);
    EXPECT_EQ(back.width, w);
    EXPECT_EQ(back.height, h);
    EXPECT_EQ(back.rgb, img.rgb);
  }
}

TEST(Png, RejectsCorruption) {
  Image img(4, 4);
  auto bytes = encode_png(img);
  auto bad = bytes;
  bad[0] = std::byte(0);
  EXPECT_THROW(decode_png(bad), FormatError);
  bad = bytes;
  bad[20] ^= std::byte(0xFF);
  EXPECT_THROW(decode_png(bad), FormatError);
  bytes.resize(bytes.size() - 10);
  EXPECT_THROW(decode_png(bytes), FormatError);
  EXPECT_THROW(encode_png(Image()), DimensionError);
}

TEST(Visualize, FieldAndOverlay) {
  std::mt19937_64 rng(2);
  const auto f = fixtures::random_field(rng, 12, 16, 8);
  auto img = visualize_field(f);
  EXPECT_EQ(img.width, 16);
  EXPECT_EQ(img.height, 12);
  const auto before = img.rgb;
  EXPECT_EQ(visualize_field(f).rgb, before);
  const std::vector<LabeledRegion> regions{{Mask::box({12, 16}, 2, 2, 4, 4), "a", 0.9, 0}};
  overlay_regions(img, regions);
  EXPECT_NE(img.rgb, before);
  // Pixels far from the region stay untouched.
  EXPECT_TRUE(std::equal(img.px(11, 15), img.px(11, 15) + 3, before.begin() + (11 * 16 + 15) * 3));
  const std::vector<LabeledRegion> wrong{{Mask(3, 3), "a", 0.9, 0}};
  EXPECT_THROW(overlay_regions(img, wrong), ShapeError);
}
