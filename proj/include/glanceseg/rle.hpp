#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glanceseg/core.hpp"

namespace glanceseg {

/// Column-major run lengths over the full mask raster. Runs alternate 0/1 and the first run
/// counts zeros (it is 0 when the first pixel is set). Counts sum to width*height.
std::vector<std::uint32_t> rle_encode(const BinaryMask& mask);

/// Inverse of rle_encode. Throws Parse when the counts do not cover `dims` exactly.
BinaryMask rle_decode(std::span<const std::uint32_t> counts, Size dims);

}  // namespace glanceseg
