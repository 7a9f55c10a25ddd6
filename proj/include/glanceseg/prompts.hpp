#pragma once

#include <span>
#include <vector>

#include "glanceseg/core.hpp"

namespace glanceseg {

/// Prompt points in ROI coordinates: unique, sorted row-major, each one salient.
struct PromptSet {
    std::vector<PixelPoint> points;
    int grid_n = 0;
    Size source_dims;
};

/// N x N cell centers floor((i + 0.5) * extent / N) along each axis, deduplicated, row-major.
std::vector<PixelPoint> make_grid(Size dims, int n);

/// Exact set intersection of the grid with the salient point set.
PromptSet intersect(std::span<const PixelPoint> grid, std::span<const PixelPoint> salient, Size dims, int n);

}  // namespace glanceseg
