#include <cstring>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "fan/io.hpp"

using namespace fan;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fan_unit_io";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::byte> bytes_of(std::initializer_list<int> v) {
  std::vector<std::byte> out;
  for (int x : v) out.push_back(std::byte(x));
  return out;
}

void put_u32(std::vector<std::byte>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(std::byte((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::byte>& b, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(b, u);
}

std::vector<std::byte> fand_header(std::uint32_t h, std::uint32_t w, std::uint32_t d) {
  auto b = bytes_of({'F', 'A', 'N', 'D', 1});
  put_u32(b, h);
  put_u32(b, w);
  put_u32(b, d);
  return b;
}

}  // namespace

TEST(Fand, RoundTripFile) {
  std::mt19937_64 rng(1);
  const auto f = fixtures::random_field(rng, 7, 5, 3);
  const auto p = temp_path("a.fand");
  io::write_descriptor_field(p, f);
  EXPECT_EQ(io::load_descriptor_field(p), f);
  EXPECT_EQ(fs::file_size(p), 5u + 12u + 7u * 5u * 3u * 4u);
}

TEST(Fand, ByteLayoutIsLittleEndianPixelMajor) {
  const DescriptorField f(1, 2, 2, {1.0f, 2.0f, 3.0f, -4.5f});
  auto expected = fand_header(1, 2, 2);
  for (float x : {1.0f, 2.0f, 3.0f, -4.5f}) put_f32(expected, x);
  EXPECT_EQ(io::encode_descriptor_field(f), expected);
}

TEST(Fand, BadMagic) {
  auto b = bytes_of({'X', 'X', 'X', 'X', 1});
  put_u32(b, 1);
  put_u32(b, 1);
  put_u32(b, 1);
  put_f32(b, 1.0f);
  try {
    io::decode_descriptor_field(b);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Fand, TruncatedPayload) {
  auto b = fand_header(2, 2, 3);
  for (int i = 0; i < 11; ++i) put_f32(b, 1.0f);
  EXPECT_THROW(io::decode_descriptor_field(b), FormatError);
  auto header_only = bytes_of({'F', 'A', 'N', 'D', 1, 2, 0});
  EXPECT_THROW(io::decode_descriptor_field(header_only), FormatError);
}

TEST(Fand, NonFiniteValue) {
  auto b = fand_header(1, 1, 2);
  put_f32(b, 1.0f);
  put_f32(b, std::numeric_limits<float>::infinity());
  try {
    io::decode_descriptor_field(b);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 17u + 4u);
  }
}

TEST(Fand, VersionAndTrailingBytes) {
  auto b = fand_header(1, 1, 1);
  put_f32(b, 1.0f);
  auto v2 = b;
  v2[4] = std::byte(2);
  EXPECT_THROW(io::decode_descriptor_field(v2), FormatError);
  b.push_back(std::byte(0));
  EXPECT_THROW(io::decode_descriptor_field(b), FormatError);
}

TEST(Fanm, RoundTripThreeMasks) {
  std::mt19937_64 rng(2);
  const std::vector<Mask> masks{fixtures::random_mask(rng, 4, 6, 0.5), fixtures::random_mask(rng, 10, 3, 0.2),
                                Mask(2, 2)};
  const auto p = temp_path("m.fanm");
  io::write_masks(p, masks);
  EXPECT_EQ(io::load_masks(p), masks);
}

TEST(Fanm, EmptyListIsValid) {
  const auto b = io::encode_masks({});
  EXPECT_EQ(b.size(), 9u);
  EXPECT_TRUE(io::decode_masks(b).empty());
}

TEST(Fanm, ValueTwoRejected) {
  auto b = bytes_of({'F', 'A', 'N', 'M', 1});
  put_u32(b, 1);
  put_u32(b, 1);
  put_u32(b, 2);
  b.push_back(std::byte(1));
  b.push_back(std::byte(2));
  try {
    io::decode_masks(b);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 9u + 8u + 1u);
  }
}

TEST(Fanm, TruncatedAndMagic) {
  auto b = bytes_of({'F', 'A', 'N', 'M', 1});
  put_u32(b, 2);
  put_u32(b, 1);
  put_u32(b, 1);
  b.push_back(std::byte(1));
  EXPECT_THROW(io::decode_masks(b), FormatError);
  b[0] = std::byte('Q');
  EXPECT_THROW(io::decode_masks(b), FormatError);
}

TEST(Files, MissingFile) {
  EXPECT_THROW(io::load_descriptor_field(temp_path("does_not_exist.fand")), Error);
}
