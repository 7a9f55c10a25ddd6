#include "glanceseg/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace glanceseg {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::EmptyTrace: return "empty-trace";
    case ErrorCode::EmptyMap: return "empty-map";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Backend: return "backend-error";
    case ErrorCode::Timeout: return "timeout";
    case ErrorCode::Generation: return "generation-error";
    case ErrorCode::UndefinedRecall: return "undefined-recall";
    }
    return "unknown";
}

BBox intersect(const BBox& a, const BBox& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.width, b.x + b.width);
    const int y1 = std::min(a.y + a.height, b.y + b.height);
    if (x1 <= x0 || y1 <= y0) return {};
    return {x0, y0, x1 - x0, y1 - y0};
}

Frame::Frame(int width, int height) : Frame(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)) * 3, 0)) {}

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0)
        throw Error(ErrorCode::InvalidParameter, "frame dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3)
        throw Error(ErrorCode::DimensionMismatch, "frame pixel buffer does not match width*height*3");
}

void Frame::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const auto i = index(x, y);
    pixels_[i] = r;
    pixels_[i + 1] = g;
    pixels_[i + 2] = b;
}

Frame Frame::crop(const BBox& box) const {
    const BBox clipped = intersect(box, {0, 0, width_, height_});
    if (clipped.empty() || clipped != box)
        throw Error(ErrorCode::InvalidParameter, "crop rectangle exceeds frame bounds");
    Frame out(box.width, box.height);
    for (int y = 0; y < box.height; ++y) {
        const auto* src = &pixels_[index(box.x, box.y + y)];
        std::copy(src, src + static_cast<std::ptrdiff_t>(box.width) * 3, &out.pixels_[out.index(0, y)]);
    }
    return out;
}

GrayMap::GrayMap(int width, int height, double fill)
    : GrayMap(width, height, std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill)) {}

GrayMap::GrayMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width <= 0 || height <= 0)
        throw Error(ErrorCode::InvalidParameter, "map dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw Error(ErrorCode::DimensionMismatch, "map buffer does not match width*height");
}

double GrayMap::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double GrayMap::max() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double GrayMap::min() const {
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

BinaryMask::BinaryMask(Size dims, BBox box, std::vector<std::uint8_t> bits) : dims_(dims) {
    if (bits.size() != static_cast<std::size_t>(std::max(box.width, 0)) * static_cast<std::size_t>(std::max(box.height, 0)))
        throw Error(ErrorCode::DimensionMismatch, "mask bits do not match bounding box");
    if (!box.empty() && intersect(box, {0, 0, dims.width, dims.height}) != box)
        throw Error(ErrorCode::InvalidParameter, "mask bounding box exceeds raster");

    int x0 = std::numeric_limits<int>::max(), y0 = x0, x1 = -1, y1 = -1;
    for (int y = 0; y < box.height; ++y)
        for (int x = 0; x < box.width; ++x)
            if (bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(box.width) + static_cast<std::size_t>(x)]) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
                ++area_;
            }
    if (area_ == 0) return;

    box_ = {box.x + x0, box.y + y0, x1 - x0 + 1, y1 - y0 + 1};
    bits_.assign(static_cast<std::size_t>(box_.width) * static_cast<std::size_t>(box_.height), 0);
    for (int y = 0; y < box_.height; ++y)
        for (int x = 0; x < box_.width; ++x)
            bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(box_.width) + static_cast<std::size_t>(x)] =
                bits[static_cast<std::size_t>(y + y0) * static_cast<std::size_t>(box.width) + static_cast<std::size_t>(x + x0)] ? 1 : 0;
}

BinaryMask BinaryMask::from_pixels(Size dims, std::span<const PixelPoint> pixels) {
    if (pixels.empty()) return BinaryMask(dims, {}, {});
    int x0 = std::numeric_limits<int>::max(), y0 = x0, x1 = -1, y1 = -1;
    for (const auto& p : pixels) {
        if (p.x < 0 || p.y < 0 || p.x >= dims.width || p.y >= dims.height)
            throw Error(ErrorCode::InvalidParameter, "mask pixel outside raster");
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
    const BBox box{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(box.width) * static_cast<std::size_t>(box.height), 0);
    for (const auto& p : pixels)
        bits[static_cast<std::size_t>(p.y - y0) * static_cast<std::size_t>(box.width) + static_cast<std::size_t>(p.x - x0)] = 1;
    return BinaryMask(dims, box, std::move(bits));
}

BinaryMask BinaryMask::from_raster(const GrayMap& map) {
    std::vector<std::uint8_t> bits(map.values().size());
    std::transform(map.values().begin(), map.values().end(), bits.begin(),
                   [](double v) { return v != 0.0 ? std::uint8_t{1} : std::uint8_t{0}; });
    return BinaryMask(map.size(), {0, 0, map.width(), map.height()}, std::move(bits));
}

std::vector<PixelPoint> BinaryMask::pixels() const {
    std::vector<PixelPoint> out;
    out.reserve(area_);
    for (int y = box_.y; y < box_.y + box_.height; ++y)
        for (int x = box_.x; x < box_.x + box_.width; ++x)
            if (at(x, y)) out.push_back({x, y});
    return out;
}

GrayMap BinaryMask::to_gray() const {
    GrayMap out(dims_.width, dims_.height);
    for (int y = box_.y; y < box_.y + box_.height; ++y)
        for (int x = box_.x; x < box_.x + box_.width; ++x)
            if (at(x, y)) out.at(x, y) = 1.0;
    return out;
}

BinaryMask BinaryMask::translated(PixelPoint offset, Size new_dims) const {
    if (empty()) return BinaryMask(new_dims, {}, {});
    const BBox moved{box_.x + offset.x, box_.y + offset.y, box_.width, box_.height};
    const BBox target = intersect(moved, {0, 0, new_dims.width, new_dims.height});
    if (target.empty()) return BinaryMask(new_dims, {}, {});
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(target.width) * static_cast<std::size_t>(target.height), 0);
    for (int y = 0; y < target.height; ++y)
        for (int x = 0; x < target.width; ++x)
            bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(target.width) + static_cast<std::size_t>(x)] =
                at(target.x + x - offset.x, target.y + y - offset.y) ? 1 : 0;
    return BinaryMask(new_dims, target, std::move(bits));
}

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
    const BBox overlap = intersect(a.bbox(), b.bbox());
    std::size_t n = 0;
    for (int y = overlap.y; y < overlap.y + overlap.height; ++y)
        for (int x = overlap.x; x < overlap.x + overlap.width; ++x)
            if (a.at(x, y) && b.at(x, y)) ++n;
    return n;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    const std::size_t inter = intersection_area(a, b);
    const std::size_t uni = a.area() + b.area() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace glanceseg
