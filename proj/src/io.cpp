#include "fan/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace fan::io {
namespace {

constexpr std::uint8_t kVersion = 0x01;

class Writer {
public:
  void magic(const char (&tag)[5]) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::byte>(tag[i]));
    bytes_.push_back(static_cast<std::byte>(kVersion));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<std::byte>(v)); }
  void reserve(std::size_t n) { bytes_.reserve(n); }
  std::vector<std::byte> take() { return std::move(bytes_); }

private:
  std::vector<std::byte> bytes_;
};

class Reader {
public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  void magic(const char (&tag)[5], const char* what) {
    need(5, what);
    for (int i = 0; i < 4; ++i) {
      if (static_cast<char>(bytes_[pos_ + i]) != tag[i]) {
        throw FormatError(std::string("bad magic, expected \"") + tag + "\"", pos_);
      }
    }
    if (static_cast<std::uint8_t>(bytes_[pos_ + 4]) != kVersion) {
      throw FormatError("unsupported version", pos_ + 4);
    }
    pos_ += 5;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what, bytes_.size());
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::byte> encode_descriptor_field(const DescriptorField& field) {
  Writer w;
  w.reserve(17 + field.data().size() * 4);
  w.magic("FAND");
  w.u32(static_cast<std::uint32_t>(field.height()));
  w.u32(static_cast<std::uint32_t>(field.width()));
  w.u32(static_cast<std::uint32_t>(field.dim()));
  for (float v : field.data()) w.f32(v);
  return w.take();
}

DescriptorField decode_descriptor_field(std::span<const std::byte> bytes) {
  Reader r(bytes);
  r.magic("FAND", "header");
  const std::uint32_t h = r.u32("header"), w = r.u32("header"), d = r.u32("header");
  if (h == 0 || w == 0 || d == 0 || h > (1u << 16) || w > (1u << 16) || d > (1u << 16)) {
    throw FormatError("invalid field shape", 5);
  }
  const std::uint64_t count = std::uint64_t{h} * w * d;
  if (r.remaining() / 4 < count) {
    throw FormatError("truncated payload: header declares " + std::to_string(count) +
                          " floats, found " + std::to_string(r.remaining() / 4),
                      r.pos() + (r.remaining() / 4) * 4);
  }
  std::vector<float> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t at = r.pos();
    data[i] = r.f32("payload");
    if (!std::isfinite(data[i])) throw FormatError("non-finite descriptor value", at);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after payload", r.pos());
  return {static_cast<int>(h), static_cast<int>(w), static_cast<int>(d), std::move(data)};
}

std::vector<std::byte> encode_masks(std::span<const Mask> masks) {
  Writer w;
  w.magic("FANM");
  w.u32(static_cast<std::uint32_t>(masks.size()));
  for (const auto& m : masks) {
    w.u32(static_cast<std::uint32_t>(m.height()));
    w.u32(static_cast<std::uint32_t>(m.width()));
    for (auto v : m.values()) w.u8(v);
  }
  return w.take();
}

std::vector<Mask> decode_masks(std::span<const std::byte> bytes) {
  Reader r(bytes);
  r.magic("FANM", "header");
  const std::uint32_t n = r.u32("header");
  std::vector<Mask> masks;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t h = r.u32("mask header"), w = r.u32("mask header");
    if (h > (1u << 16) || w > (1u << 16)) throw FormatError("invalid mask shape", r.pos() - 8);
    const std::uint64_t count = std::uint64_t{h} * w;
    if (r.remaining() < count) {
      throw FormatError("truncated mask " + std::to_string(i), r.pos() + r.remaining());
    }
    std::vector<std::uint8_t> values(count);
    for (std::uint64_t k = 0; k < count; ++k) {
      const std::size_t at = r.pos();
      values[k] = r.u8("mask payload");
      if (values[k] > 1) {
        throw FormatError("mask value " + std::to_string(values[k]) + " is not 0 or 1", at);
      }
    }
    masks.emplace_back(static_cast<int>(h), static_cast<int>(w), std::move(values));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after mask list", r.pos());
  return masks;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error("cannot read " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

void write_descriptor_field(const std::filesystem::path& path, const DescriptorField& field) {
  write_file(path, encode_descriptor_field(field));
}

DescriptorField load_descriptor_field(const std::filesystem::path& path) {
  return decode_descriptor_field(read_file(path));
}

void write_masks(const std::filesystem::path& path, std::span<const Mask> masks) {
  write_file(path, encode_masks(masks));
}

std::vector<Mask> load_masks(const std::filesystem::path& path) {
  return decode_masks(read_file(path));
}

}  // namespace fan::io
