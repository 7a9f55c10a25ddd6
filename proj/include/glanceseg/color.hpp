#pragma once

#include <cstdint>

#include "glanceseg/core.hpp"

namespace glanceseg {

struct Lab {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// CIE L*a*b* of an 8-bit sRGB color (IEC 61966-2-1 linearization, D65 white).
Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Rec. 601 luma in [0,1].
inline double luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

struct LabImage {
    GrayMap L;
    GrayMap a;
    GrayMap b;
};

LabImage to_lab(const Frame& frame);
GrayMap to_luminance(const Frame& frame);

}  // namespace glanceseg
