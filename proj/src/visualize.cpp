#include "fan/visualize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <string>

#include <zlib.h>

namespace fan {

namespace {

std::vector<std::array<float, 3>> projection(int dim) {
  std::mt19937_64 rng(0xF00Dull + static_cast<std::uint64_t>(dim));
  std::normal_distribution<float> g;
  std::vector<std::array<float, 3>> p(static_cast<std::size_t>(dim));
  for (auto& row : p) {
    for (auto& v : row) v = g(rng);
  }
  for (int k = 0; k < 3; ++k) {
    double n = 0.0;
    for (const auto& row : p) n += double(row[k]) * row[k];
    n = std::sqrt(n);
    for (auto& row : p) row[k] = static_cast<float>(row[k] / n);
  }
  return p;
}

std::array<std::uint8_t, 3> label_colour(const std::string& label) {
  const auto h = std::hash<std::string>{}(label);
  static constexpr std::array<std::array<std::uint8_t, 3>, 6> palette{
      {{230, 60, 60}, {60, 200, 80}, {70, 110, 240}, {240, 200, 40}, {200, 70, 220}, {40, 210, 210}}};
  return palette[h % palette.size()];
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::byte>((v >> s) & 0xFF));
}

std::uint32_t get_u32(std::span<const std::byte> b, std::size_t at) {
  if (at + 4 > b.size()) throw FormatError("png: truncated", at);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | std::to_integer<std::uint32_t>(b[at + i]);
  return v;
}

void put_chunk(std::vector<std::byte>& out, const char* type, std::span<const std::byte> data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>(type[i]));
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data() + start),
                         static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

constexpr std::array<std::uint8_t, 8> kSignature{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

}  // namespace

Image visualize_field(const DescriptorField& field) {
  const auto p = projection(field.dim());
  Image img(field.width(), field.height());
  for (int r = 0; r < field.height(); ++r) {
    for (int c = 0; c < field.width(); ++c) {
      const auto v = field.pixel(r, c);
      double norm = 0.0;
      std::array<double, 3> acc{};
      for (int k = 0; k < field.dim(); ++k) {
        norm += double(v[k]) * v[k];
        for (int ch = 0; ch < 3; ++ch) acc[ch] += double(v[k]) * p[k][ch];
      }
      norm = std::sqrt(norm);
      auto* out = img.px(r, c);
      for (int ch = 0; ch < 3; ++ch) {
        const double u = norm > 0.0 ? acc[ch] / norm : 0.0;
        out[ch] = static_cast<std::uint8_t>(std::clamp(127.5 + 127.5 * u, 0.0, 255.0));
      }
    }
  }
  return img;
}

void overlay_regions(Image& image, std::span<const LabeledRegion> regions) {
  for (const auto& region : regions) {
    if (region.mask.width() != image.width || region.mask.height() != image.height) {
      throw ShapeError("overlay: region " + to_string(region.mask.shape()) +
                       " does not match image");
    }
    const auto colour = label_colour(region.label.value_or(""));
    for (int r = 0; r < image.height; ++r) {
      for (int c = 0; c < image.width; ++c) {
        if (!region.mask.at(r, c)) continue;
        auto* px = image.px(r, c);
        for (int ch = 0; ch < 3; ++ch) px[ch] = static_cast<std::uint8_t>((px[ch] + colour[ch]) / 2);
      }
    }
    const BoundingBox b = bounding_box(region.mask);
    if (b.empty()) continue;
    auto paint = [&](int r, int c) {
      auto* px = image.px(r, c);
      std::copy(colour.begin(), colour.end(), px);
    };
    for (int c = b.x; c < b.x + b.w; ++c) {
      paint(b.y, c);
      paint(b.y + b.h - 1, c);
    }
    for (int r = b.y; r < b.y + b.h; ++r) {
      paint(r, b.x);
      paint(r, b.x + b.w - 1);
    }
  }
}

std::vector<std::byte> encode_png(const Image& image) {
  if (image.width <= 0 || image.height <= 0) throw DimensionError("png: empty image");
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  std::vector<Bytef> raw;
  raw.reserve((stride + 1) * image.height);
  for (int r = 0; r < image.height; ++r) {
    raw.push_back(0);
    const auto* row = image.px(r, 0);
    raw.insert(raw.end(), row, row + stride);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::byte> packed(packed_size);
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw Error("png: compression failed");
  }
  packed.resize(packed_size);

  std::vector<std::byte> out;
  for (auto b : kSignature) out.push_back(static_cast<std::byte>(b));
  std::vector<std::byte> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  for (std::uint8_t b : {8, 2, 0, 0, 0}) ihdr.push_back(static_cast<std::byte>(b));
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

Image decode_png(std::span<const std::byte> bytes) {
  if (bytes.size() < kSignature.size() ||
      std::memcmp(bytes.data(), kSignature.data(), kSignature.size()) != 0) {
    throw FormatError("png: bad signature", 0);
  }
  std::size_t at = kSignature.size();
  int width = 0, height = 0;
  std::vector<Bytef> idat;
  bool ended = false;
  while (!ended) {
    const std::uint32_t len = get_u32(bytes, at);
    if (at + 12 + len > bytes.size()) throw FormatError("png: truncated chunk", at);
    const std::string type(reinterpret_cast<const char*>(bytes.data() + at + 4), 4);
    const auto* data = bytes.data() + at + 8;
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(bytes.data() + at + 4), len + 4);
    if (get_u32(bytes, at + 8 + len) != static_cast<std::uint32_t>(crc)) {
      throw FormatError("png: bad crc in " + type, at);
    }
    if (type == "IHDR") {
      width = static_cast<int>(get_u32(bytes, at + 8));
      height = static_cast<int>(get_u32(bytes, at + 12));
      if (std::to_integer<int>(data[8]) != 8 || std::to_integer<int>(data[9]) != 2 ||
          std::to_integer<int>(data[12]) != 0) {
        throw FormatError("png: only 8-bit RGB non-interlaced images are supported", at);
      }
    } else if (type == "IDAT") {
      const auto* p = reinterpret_cast<const Bytef*>(data);
      idat.insert(idat.end(), p, p + len);
    } else if (type == "IEND") {
      ended = true;
    }
    at += 12 + len;
  }
  if (width <= 0 || height <= 0) throw FormatError("png: missing IHDR", 8);
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  std::vector<Bytef> raw((stride + 1) * height);
  uLongf raw_size = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_size, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_size != raw.size()) {
    throw FormatError("png: corrupt image data", 0);
  }
  Image img(width, height);
  for (int r = 0; r < height; ++r) {
    const Bytef* row = raw.data() + r * (stride + 1);
    if (row[0] != 0) throw FormatError("png: unsupported row filter", 0);
    std::copy(row + 1, row + 1 + stride, img.px(r, 0));
  }
  return img;
}

}  // namespace fan
