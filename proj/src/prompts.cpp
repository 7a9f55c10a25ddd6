#include "glanceseg/prompts.hpp"

#include <algorithm>
#include <cmath>

namespace glanceseg {
namespace {

std::vector<int> axis_centers(int extent, int n) {
    std::vector<int> c;
    c.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int v = static_cast<int>(std::floor((i + 0.5) * extent / n));
        c.push_back(std::clamp(v, 0, extent - 1));
    }
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

}  // namespace

std::vector<PixelPoint> make_grid(Size dims, int n) {
    if (n < 2) throw Error(ErrorCode::InvalidParameter, "grid N must be at least 2");
    if (dims.width <= 0 || dims.height <= 0) throw Error(ErrorCode::InvalidParameter, "grid dimensions must be positive");
    const auto xs = axis_centers(dims.width, n);
    const auto ys = axis_centers(dims.height, n);
    std::vector<PixelPoint> grid;
    grid.reserve(xs.size() * ys.size());
    for (int y : ys)
        for (int x : xs) grid.push_back({x, y});
    return grid;
}

PromptSet intersect(std::span<const PixelPoint> grid, std::span<const PixelPoint> salient, Size dims, int n) {
    std::vector<std::uint8_t> member(dims.area(), 0);
    auto inside = [&](const PixelPoint& p) { return p.x >= 0 && p.y >= 0 && p.x < dims.width && p.y < dims.height; };
    for (const auto& p : salient)
        if (inside(p)) member[static_cast<std::size_t>(p.y) * static_cast<std::size_t>(dims.width) + static_cast<std::size_t>(p.x)] = 1;
    PromptSet out{{}, n, dims};
    for (const auto& p : grid)
        if (inside(p) && member[static_cast<std::size_t>(p.y) * static_cast<std::size_t>(dims.width) + static_cast<std::size_t>(p.x)])
            out.points.push_back(p);
    std::sort(out.points.begin(), out.points.end());
    out.points.erase(std::unique(out.points.begin(), out.points.end()), out.points.end());
    return out;
}

}  // namespace glanceseg
