#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glanceseg/core.hpp"

namespace glanceseg {

Frame read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Frame& frame);

std::vector<std::uint8_t> encode_png(const Frame& frame);
std::vector<std::uint8_t> encode_png_gray8(const BinaryMask& mask);
Frame decode_image(std::span<const std::uint8_t> bytes);

/// Binary mask from an 8-bit gray PNG (any nonzero pixel is set).
BinaryMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

/// 16-bit grayscale dump of a map rescaled from [min,max] to [0,65535].
void write_png16(const std::filesystem::path& path, const GrayMap& map);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace glanceseg
