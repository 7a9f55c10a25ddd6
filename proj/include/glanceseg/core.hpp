#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace glanceseg {

enum class ErrorCode {
    InvalidParameter,
    EmptyTrace,
    EmptyMap,
    DimensionMismatch,
    Parse,
    Io,
    Backend,
    Timeout,
    Generation,
    UndefinedRecall,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct Size {
    int width = 0;
    int height = 0;

    std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    bool operator==(const Size&) const = default;
};

struct PixelPoint {
    int x = 0;
    int y = 0;

    bool operator==(const PixelPoint&) const = default;
    // Row-major order: by row first, then column.
    std::strong_ordering operator<=>(const PixelPoint& o) const {
        if (auto c = y <=> o.y; c != 0) return c;
        return x <=> o.x;
    }
};

struct Point2d {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned pixel rectangle; empty when width or height is zero.
struct BBox {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool empty() const { return width <= 0 || height <= 0; }
    bool contains(int px, int py) const {
        return px >= x && py >= y && px < x + width && py < y + height;
    }
    bool operator==(const BBox&) const = default;
};

BBox intersect(const BBox& a, const BBox& b);

/// 8-bit RGB raster, row-major, interleaved.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height);
    Frame(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    Size size() const { return {width_, height_}; }
    bool empty() const { return pixels_.empty(); }

    std::uint8_t& at(int x, int y, int c) { return pixels_[index(x, y) + static_cast<std::size_t>(c)]; }
    std::uint8_t at(int x, int y, int c) const { return pixels_[index(x, y) + static_cast<std::size_t>(c)]; }

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    std::span<const std::uint8_t> pixels() const { return pixels_; }
    std::span<std::uint8_t> pixels() { return pixels_; }

    Frame crop(const BBox& box) const;

    bool operator==(const Frame&) const = default;

private:
    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Row-major double raster backing gaze maps, saliency maps and distance maps.
class GrayMap {
public:
    GrayMap() = default;
    GrayMap(int width, int height, double fill = 0.0);
    GrayMap(int width, int height, std::vector<double> values);

    int width() const { return width_; }
    int height() const { return height_; }
    Size size() const { return {width_, height_}; }
    bool empty() const { return values_.empty(); }

    double& at(int x, int y) { return values_[index(x, y)]; }
    double at(int x, int y) const { return values_[index(x, y)]; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double sum() const;
    double max() const;
    double min() const;

    bool operator==(const GrayMap&) const = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Binary mask over a raster of `dims`, stored only within its tight bounding box.
class BinaryMask {
public:
    BinaryMask() = default;
    /// `bits` is row-major inside `box`; the box is tightened on construction.
    BinaryMask(Size dims, BBox box, std::vector<std::uint8_t> bits);

    static BinaryMask from_pixels(Size dims, std::span<const PixelPoint> pixels);
    /// Every nonzero value of `map` becomes a mask pixel.
    static BinaryMask from_raster(const GrayMap& map);

    Size dims() const { return dims_; }
    const BBox& bbox() const { return box_; }
    std::size_t area() const { return area_; }
    bool empty() const { return area_ == 0; }

    bool at(int x, int y) const {
        if (!box_.contains(x, y)) return false;
        return bits_[static_cast<std::size_t>(y - box_.y) * static_cast<std::size_t>(box_.width) +
                     static_cast<std::size_t>(x - box_.x)] != 0;
    }

    std::vector<PixelPoint> pixels() const;
    GrayMap to_gray() const;

    /// Moves the mask by `offset` into a raster of `new_dims`, clipping pixels that fall outside.
    BinaryMask translated(PixelPoint offset, Size new_dims) const;

    bool operator==(const BinaryMask&) const = default;

private:
    Size dims_;
    BBox box_;
    std::size_t area_ = 0;
    std::vector<std::uint8_t> bits_;
};

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b);
double iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace glanceseg
