#pragma once

// Binary containers for descriptor fields ("FAND") and mask lists ("FANM").
//
// FAND: "FAND" 0x01, u32 h, u32 w, u32 d, then h*w*d f32, all little-endian,
//       pixel-major.
// FANM: "FANM" 0x01, u32 n, then per mask u32 h, u32 w and h*w bytes in {0,1}.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fan/core.hpp"

namespace fan::io {

std::vector<std::byte> encode_descriptor_field(const DescriptorField& field);
DescriptorField decode_descriptor_field(std::span<const std::byte> bytes);

std::vector<std::byte> encode_masks(std::span<const Mask> masks);
std::vector<Mask> decode_masks(std::span<const std::byte> bytes);

void write_descriptor_field(const std::filesystem::path& path, const DescriptorField& field);
DescriptorField load_descriptor_field(const std::filesystem::path& path);

void write_masks(const std::filesystem::path& path, std::span<const Mask> masks);
std::vector<Mask> load_masks(const std::filesystem::path& path);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace fan::io
