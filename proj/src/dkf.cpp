#include "glanceseg/dkf.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "glanceseg/color.hpp"
#include "glanceseg/raster.hpp"

namespace glanceseg {
namespace {

// Clockwise in image coordinates (y grows downward), starting east.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_between(PixelPoint from, PixelPoint to) {
    for (int d = 0; d < 8; ++d)
        if (from.x + kDx[d] == to.x && from.y + kDy[d] == to.y) return d;
    return -1;
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double contour_perimeter(const BinaryMask& mask) {
    if (mask.empty()) return 0.0;
    const BBox& b = mask.bbox();
    PixelPoint start{-1, -1};
    for (int y = b.y; y < b.y + b.height && start.x < 0; ++y)
        for (int x = b.x; x < b.x + b.width; ++x)
            if (mask.at(x, y)) {
                start = {x, y};
                break;
            }

    // Moore-neighbour tracing; the pixel west of the row-major first pixel is background.
    auto next = [&](PixelPoint p, int backtrack, int& found_dir, int& new_backtrack) {
        for (int k = 1; k <= 8; ++k) {
            const int d = (backtrack + k) % 8;
            const PixelPoint q{p.x + kDx[d], p.y + kDy[d]};
            if (mask.at(q.x, q.y)) {
                const int prev = (backtrack + k - 1) % 8;
                const PixelPoint bg{p.x + kDx[prev], p.y + kDy[prev]};
                found_dir = d;
                new_backtrack = direction_between(q, bg);
                return q;
            }
        }
        found_dir = -1;
        return p;
    };

    int first_dir = 0, back = 0;
    PixelPoint cur = next(start, 4, first_dir, back);
    if (first_dir < 0) return 0.0;
    double length = (first_dir % 2 == 0) ? 1.0 : std::numbers::sqrt2;
    // Jacob's stopping criterion: stop on re-entering the start with the initial move.
    for (std::size_t guard = 0; guard < 8 * mask.area() + 8; ++guard) {
        int dir = 0, nb = 0;
        const PixelPoint q = next(cur, back, dir, nb);
        if (cur == start && dir == first_dir) return length;
        length += (dir % 2 == 0) ? 1.0 : std::numbers::sqrt2;
        cur = q;
        back = nb;
    }
    return length;
}

double roundness(const BinaryMask& mask) {
    if (mask.empty()) throw Error(ErrorCode::InvalidParameter, "roundness of an empty mask");
    if (mask.area() == 1) return 1.0;
    if (connected_components(mask).size() != 1) return 0.0;
    const double c = contour_perimeter(mask);
    return 4.0 * std::numbers::pi * static_cast<double>(mask.area()) / (c * c);
}

BinaryMask background_ring(const BinaryMask& mask, int radius) {
    const Size d = mask.dims();
    if (mask.empty()) return BinaryMask(d, {}, {});
    const BBox& b = mask.bbox();
    const int x0 = std::max(0, b.x - radius), y0 = std::max(0, b.y - radius);
    const int x1 = std::min(d.width, b.x + b.width + radius), y1 = std::min(d.height, b.y + b.height + radius);
    const BBox box{x0, y0, x1 - x0, y1 - y0};
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(box.width) * static_cast<std::size_t>(box.height), 0);
    for (const auto& p : mask.pixels())
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx) {
                if (dx * dx + dy * dy > radius * radius) continue;
                const int x = p.x + dx, y = p.y + dy;
                if (x < x0 || y < y0 || x >= x1 || y >= y1 || mask.at(x, y)) continue;
                bits[static_cast<std::size_t>(y - y0) * static_cast<std::size_t>(box.width) + static_cast<std::size_t>(x - x0)] = 1;
            }
    return BinaryMask(d, box, std::move(bits));
}

ColorStats color_pass(const Frame& roi, const BinaryMask& mask, const BinaryMask& ring) {
    if (mask.empty()) throw Error(ErrorCode::InvalidParameter, "color test on an empty mask");
    if (mask.dims() != roi.size()) throw Error(ErrorCode::DimensionMismatch, "mask does not match ROI");
    auto a_of = [&](int x, int y) { return srgb_to_lab(roi.at(x, y, 0), roi.at(x, y, 1), roi.at(x, y, 2)).a; };
    ColorStats s;
    double sum = 0.0;
    for (const auto& p : mask.pixels()) sum += a_of(p.x, p.y);
    s.mean_a_star = sum / static_cast<double>(mask.area());

    double bg = 0.0;
    std::size_t n = 0;
    if (!ring.empty()) {
        for (const auto& p : ring.pixels()) bg += a_of(p.x, p.y);
        n = ring.area();
    } else {
        for (int y = 0; y < roi.height(); ++y)
            for (int x = 0; x < roi.width(); ++x)
                if (!mask.at(x, y)) {
                    bg += a_of(x, y);
                    ++n;
                }
        if (n == 0) {
            bg = sum;
            n = mask.area();
        }
    }
    s.background_mean_a_star = bg / static_cast<double>(n);
    s.pass = s.mean_a_star > 0.0 && s.mean_a_star > s.background_mean_a_star;
    return s;
}

double smoothness(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::InvalidParameter, "smoothness of an empty region");
    const double m = mean_of(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

std::vector<double> gray_values(const Frame& roi, const BinaryMask& mask) {
    std::vector<double> out;
    out.reserve(mask.area());
    for (const auto& p : mask.pixels())
        out.push_back(255.0 * luminance(roi.at(p.x, p.y, 0), roi.at(p.x, p.y, 1), roi.at(p.x, p.y, 2)));
    return out;
}

DkfRecord evaluate_candidate(const CandidateMask& candidate, const Frame& roi, double roundness_min,
                             double roi_smoothness) {
    DkfRecord r;
    r.roundness = roundness(candidate.mask);
    r.shape = r.roundness >= roundness_min;

    BinaryMask ring = background_ring(candidate.mask);
    const ColorStats c = color_pass(roi, candidate.mask, ring);
    r.mean_a_star = c.mean_a_star;
    r.background_mean_a_star = c.background_mean_a_star;
    r.color = c.pass;

    r.smoothness = smoothness(gray_values(roi, candidate.mask));
    r.roi_smoothness = roi_smoothness;
    r.background_smoothness = ring.empty() ? roi_smoothness : smoothness(gray_values(roi, ring));
    r.texture = r.smoothness < r.background_smoothness;

    r.accepted = r.shape && r.color && r.texture;
    r.confidence = candidate.confidence;
    r.bbox = candidate.bbox();
    r.source_prompt = candidate.source_prompt;
    r.area = candidate.mask.area();
    return r;
}

DkfResult apply_dkf(std::span<const CandidateMask> candidates, const Frame& roi, PixelPoint origin, Size frame_dims,
                    const PipelineConfig& config, int roi_index) {
    DkfResult out;
    if (candidates.empty()) return out;
    const BinaryMask whole(roi.size(), {0, 0, roi.width(), roi.height()}, std::vector<std::uint8_t>(roi.size().area(), 1));
    const double roi_sd = smoothness(gray_values(roi, whole));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        DkfRecord r = evaluate_candidate(candidates[i], roi, config.dkf_roundness_min, roi_sd);
        r.roi_index = roi_index;
        r.candidate_index = static_cast<int>(i);
        r.bbox.x += origin.x;
        r.bbox.y += origin.y;
        r.source_prompt = {r.source_prompt.x + origin.x, r.source_prompt.y + origin.y};
        if (r.accepted)
            out.accepted.push_back({candidates[i].mask.translated(origin, frame_dims), candidates[i].confidence,
                                    r.source_prompt});
        out.records.push_back(r);
    }
    return out;
}

std::vector<CandidateMask> merge_across_rois(std::vector<CandidateMask> masks) {
    return dedup_masks(std::move(masks), kCrossRoiMergeIou);
}

std::string dkf_record_json(const DkfRecord& r) {
    const nlohmann::ordered_json j = {
        {"roi_index", r.roi_index},
        {"candidate_index", r.candidate_index},
        {"bbox", {r.bbox.x, r.bbox.y, r.bbox.width, r.bbox.height}},
        {"source_prompt", {r.source_prompt.x, r.source_prompt.y}},
        {"area", r.area},
        {"confidence", r.confidence},
        {"roundness", r.roundness},
        {"mean_a_star", r.mean_a_star},
        {"background_mean_a_star", r.background_mean_a_star},
        {"smoothness", r.smoothness},
        {"background_smoothness", r.background_smoothness},
        {"roi_smoothness", r.roi_smoothness},
        {"passed", {{"shape", r.shape}, {"color", r.color}, {"texture", r.texture}}},
        {"accepted", r.accepted},
    };
    return j.dump();
}

void write_dkf_report(std::ostream& out, std::span<const DkfRecord> records) {
    for (const auto& r : records) out << dkf_record_json(r) << '\n';
}

}  // namespace glanceseg
