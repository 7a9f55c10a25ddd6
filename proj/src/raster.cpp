#include "glanceseg/raster.hpp"

#include <algorithm>
#include <cmath>

namespace glanceseg {
namespace {

template <typename IsSet>
std::vector<Component> label(Size dims, BBox scan, IsSet&& is_set) {
    std::vector<Component> out;
    std::vector<std::uint8_t> seen(dims.area(), 0);
    std::vector<PixelPoint> stack;
    auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * static_cast<std::size_t>(dims.width) + static_cast<std::size_t>(x); };

    for (int y = scan.y; y < scan.y + scan.height; ++y) {
        for (int x = scan.x; x < scan.x + scan.width; ++x) {
            if (seen[idx(x, y)] || !is_set(x, y)) continue;
            Component comp;
            stack.assign(1, {x, y});
            seen[idx(x, y)] = 1;
            while (!stack.empty()) {
                const PixelPoint p = stack.back();
                stack.pop_back();
                comp.pixels.push_back(p);
                constexpr int dx[4] = {1, -1, 0, 0};
                constexpr int dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = p.x + dx[k], ny = p.y + dy[k];
                    if (nx < 0 || ny < 0 || nx >= dims.width || ny >= dims.height) continue;
                    if (seen[idx(nx, ny)] || !is_set(nx, ny)) continue;
                    seen[idx(nx, ny)] = 1;
                    stack.push_back({nx, ny});
                }
            }
            std::sort(comp.pixels.begin(), comp.pixels.end());
            int x0 = comp.pixels.front().x, x1 = x0;
            for (const auto& p : comp.pixels) {
                x0 = std::min(x0, p.x);
                x1 = std::max(x1, p.x);
            }
            const int y0 = comp.pixels.front().y, y1 = comp.pixels.back().y;
            comp.box = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
            out.push_back(std::move(comp));
        }
    }
    return out;
}

}  // namespace

std::vector<Component> connected_components(const GrayMap& binary) {
    return label(binary.size(), {0, 0, binary.width(), binary.height()},
                 [&](int x, int y) { return binary.at(x, y) != 0.0; });
}

std::vector<Component> connected_components(const BinaryMask& mask) {
    return label(mask.dims(), mask.bbox(), [&](int x, int y) { return mask.at(x, y); });
}

double nonzero_quantile(const GrayMap& map, double quantile) {
    std::vector<double> nz;
    for (double v : map.values())
        if (v != 0.0) nz.push_back(v);
    if (nz.empty()) return 0.0;
    const auto n = nz.size();
    auto k = static_cast<std::size_t>(std::floor(std::clamp(quantile, 0.0, 1.0) * static_cast<double>(n)));
    k = std::min(k, n - 1);
    std::nth_element(nz.begin(), nz.begin() + static_cast<std::ptrdiff_t>(k), nz.end());
    return nz[k];
}

GrayMap threshold_at_least(const GrayMap& map, double threshold) {
    GrayMap out(map.width(), map.height());
    auto src = map.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= threshold ? 1.0 : 0.0;
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0)) throw Error(ErrorCode::InvalidParameter, "gaussian sigma must be positive");
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        total += v;
    }
    for (double& v : k) v /= total;
    return k;
}

GrayMap convolve_separable(const GrayMap& in, std::span<const double> kernel) {
    if (kernel.size() % 2 != 1) throw Error(ErrorCode::InvalidParameter, "kernel length must be odd");
    const int r = static_cast<int>(kernel.size() / 2);
    const int w = in.width(), h = in.height();
    GrayMap tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += kernel[static_cast<std::size_t>(k + r)] * in.at(std::clamp(x + k, 0, w - 1), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += kernel[static_cast<std::size_t>(k + r)] * tmp.at(x, std::clamp(y + k, 0, h - 1));
            out.at(x, y) = acc;
        }
    return out;
}

bool normalize_min_max(GrayMap& map, double eps) {
    const double lo = map.min(), hi = map.max();
    auto v = map.values();
    if (!(hi - lo > eps)) {
        std::fill(v.begin(), v.end(), 0.0);
        return false;
    }
    const double span = hi - lo;
    for (double& x : v) x = (x - lo) / span;
    return true;
}

GrayMap flip_horizontal(const GrayMap& in) {
    GrayMap out(in.width(), in.height());
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x) out.at(in.width() - 1 - x, y) = in.at(x, y);
    return out;
}

GrayMap flip_vertical(const GrayMap& in) {
    GrayMap out(in.width(), in.height());
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x) out.at(x, in.height() - 1 - y) = in.at(x, y);
    return out;
}

}  // namespace glanceseg
