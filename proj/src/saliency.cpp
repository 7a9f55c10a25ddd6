#include "glanceseg/saliency.hpp"

#include <cmath>
#include <limits>

#include "glanceseg/raster.hpp"

namespace glanceseg {
namespace {

void require_min_size(const Frame& roi) {
    if (roi.width() < 8 || roi.height() < 8)
        throw Error(ErrorCode::InvalidParameter, "saliency needs a frame of at least 8x8 pixels");
}

}  // namespace

const char* to_string(SaliencyMethod method) {
    switch (method) {
    case SaliencyMethod::FT: return "FT";
    case SaliencyMethod::MBD: return "MBD";
    case SaliencyMethod::Combined: return "COMBINED";
    }
    return "?";
}

std::vector<double> ft_kernel(double cutoff) {
    if (!(cutoff > 0)) throw Error(ErrorCode::InvalidParameter, "ft cutoff must be positive");
    if (std::abs(cutoff - kDefaultFtCutoff) < 1e-12) return {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    return gaussian_kernel(kDefaultFtCutoff / cutoff);
}

GrayMap ft_response(const LabImage& lab, double cutoff) {
    const auto kernel = ft_kernel(cutoff);
    const GrayMap* channels[3] = {&lab.L, &lab.a, &lab.b};
    GrayMap out(lab.L.width(), lab.L.height());
    for (const GrayMap* ch : channels) {
        if (ch->size() != out.size()) throw Error(ErrorCode::DimensionMismatch, "Lab channels differ in size");
        // Offsetting by the first value makes a constant channel contribute exactly zero.
        GrayMap shifted = *ch;
        const double k = ch->values()[0];
        for (double& v : shifted.values()) v -= k;
        const double mean = shifted.sum() / static_cast<double>(shifted.values().size());
        const GrayMap blurred = convolve_separable(shifted, kernel);
        auto dst = out.values();
        auto src = blurred.values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const double d = mean - src[i];
            dst[i] += d * d;
        }
    }
    for (double& v : out.values()) v = std::sqrt(v);
    return out;
}

SaliencyMap ft_saliency(const Frame& roi, double cutoff) {
    require_min_size(roi);
    SaliencyMap s{ft_response(to_lab(roi), cutoff), SaliencyMethod::FT, false};
    s.degenerate = !normalize_min_max(s.map);
    return s;
}

GrayMap mbd_raster_scan(const GrayMap& img, int max_passes) {
    const int w = img.width(), h = img.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    GrayMap dist(w, h, inf);
    GrayMap upper = img, lower = img;
    for (int x = 0; x < w; ++x) dist.at(x, 0) = dist.at(x, h - 1) = 0.0;
    for (int y = 0; y < h; ++y) dist.at(0, y) = dist.at(w - 1, y) = 0.0;

    auto relax = [&](int x, int y, int nx, int ny) {
        const double v = img.at(x, y);
        const double hi = std::max(upper.at(nx, ny), v);
        const double lo = std::min(lower.at(nx, ny), v);
        if (hi - lo < dist.at(x, y)) {
            dist.at(x, y) = hi - lo;
            upper.at(x, y) = hi;
            lower.at(x, y) = lo;
            return true;
        }
        return false;
    };

    for (int pass = 0; pass < max_passes; ++pass) {
        bool changed = false;
        if (pass % 2 == 0) {
            for (int y = 1; y < h - 1; ++y)
                for (int x = 1; x < w - 1; ++x) {
                    changed |= relax(x, y, x - 1, y);
                    changed |= relax(x, y, x, y - 1);
                }
        } else {
            for (int y = h - 2; y >= 1; --y)
                for (int x = w - 2; x >= 1; --x) {
                    changed |= relax(x, y, x + 1, y);
                    changed |= relax(x, y, x, y + 1);
                }
        }
        if (!changed) break;
    }
    return dist;
}

GrayMap mbd_distance(const GrayMap& gray, int max_passes) {
    GrayMap best = mbd_raster_scan(gray, max_passes);
    auto take_min = [&](const GrayMap& other) {
        auto b = best.values();
        auto o = other.values();
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::min(b[i], o[i]);
    };
    take_min(flip_horizontal(mbd_raster_scan(flip_horizontal(gray), max_passes)));
    take_min(flip_vertical(mbd_raster_scan(flip_vertical(gray), max_passes)));
    const GrayMap rotated = flip_vertical(flip_horizontal(gray));
    take_min(flip_horizontal(flip_vertical(mbd_raster_scan(rotated, max_passes))));
    return best;
}

SaliencyMap mbd_saliency(const Frame& roi, int max_passes) {
    require_min_size(roi);
    if (max_passes <= 0) throw Error(ErrorCode::InvalidParameter, "mbd_max_passes must be positive");
    SaliencyMap s{mbd_distance(to_luminance(roi), max_passes), SaliencyMethod::MBD, false};
    s.degenerate = !normalize_min_max(s.map);
    return s;
}

SaliencyMap fuse(const SaliencyMap& ft, const SaliencyMap& mbd, double gamma, double eta) {
    if (ft.map.size() != mbd.map.size()) throw Error(ErrorCode::DimensionMismatch, "saliency maps differ in size");
    SaliencyMap out{GrayMap(ft.map.width(), ft.map.height()), SaliencyMethod::Combined, false};
    auto dst = out.map.values();
    auto a = ft.map.values();
    auto b = mbd.map.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = gamma * a[i] + eta * b[i];
    out.degenerate = !normalize_min_max(out.map);
    return out;
}

SalientPoints binarize_saliency(const SaliencyMap& map, double quantile) {
    SalientPoints out{GrayMap(map.map.width(), map.map.height()), {}};
    if (map.map.max() <= 0.0) return out;
    out.binary = threshold_at_least(map.map, nonzero_quantile(map.map, quantile));
    for (int y = 0; y < out.binary.height(); ++y)
        for (int x = 0; x < out.binary.width(); ++x)
            if (out.binary.at(x, y) != 0.0) out.points.push_back({x, y});
    return out;
}

}  // namespace glanceseg
