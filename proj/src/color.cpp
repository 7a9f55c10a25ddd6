#include "glanceseg/color.hpp"

#include <array>
#include <cmath>

namespace glanceseg {
namespace {

// D65 reference white, 2 degree observer.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

const std::array<double, 256>& linear_lut() {
    static const std::array<double, 256> lut = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double c = i / 255.0;
            t[static_cast<std::size_t>(i)] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
        }
        return t;
    }();
    return lut;
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Lab srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const auto& lut = linear_lut();
    const double r = lut[r8], g = lut[g8], b = lut[b8];
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / kXn), fy = lab_f(y / kYn), fz = lab_f(z / kZn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage to_lab(const Frame& frame) {
    const int w = frame.width(), h = frame.height();
    LabImage out{GrayMap(w, h), GrayMap(w, h), GrayMap(w, h)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Lab c = srgb_to_lab(frame.at(x, y, 0), frame.at(x, y, 1), frame.at(x, y, 2));
            out.L.at(x, y) = c.L;
            out.a.at(x, y) = c.a;
            out.b.at(x, y) = c.b;
        }
    return out;
}

GrayMap to_luminance(const Frame& frame) {
    GrayMap out(frame.width(), frame.height());
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x)
            out.at(x, y) = luminance(frame.at(x, y, 0), frame.at(x, y, 1), frame.at(x, y, 2));
    return out;
}

}  // namespace glanceseg
