#include "glanceseg/gaze_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "glanceseg/color.hpp"
#include "glanceseg/raster.hpp"

namespace glanceseg {
namespace {

// Pixels darker than this luma are treated as outside the fundus field.
constexpr double kFieldLuma = 0.1;
constexpr double kDarkQuantile = 0.10;

std::vector<PixelPoint> dark_field_pixels(const Frame& frame, const BinaryMask& gt) {
    const GrayMap lum = to_luminance(frame);
    std::vector<double> field;
    for (double v : lum.values())
        if (v > kFieldLuma) field.push_back(v);
    std::vector<PixelPoint> out;
    if (field.empty()) return out;
    const std::size_t k = static_cast<std::size_t>(std::floor(kDarkQuantile * static_cast<double>(field.size() - 1)));
    std::nth_element(field.begin(), field.begin() + static_cast<std::ptrdiff_t>(k), field.end());
    const double cut = field[k];
    for (int y = 0; y < lum.height(); ++y)
        for (int x = 0; x < lum.width(); ++x) {
            const double v = lum.at(x, y);
            if (v > kFieldLuma && v <= cut && !gt.at(x, y)) out.push_back({x, y});
        }
    return out;
}

}  // namespace

GazeTrace simulate_gaze(const BinaryMask& gt, const Frame& frame, const GazeSimSpec& spec, std::string image_id) {
    if (gt.dims() != frame.size()) throw Error(ErrorCode::DimensionMismatch, "ground truth does not match frame");
    if (spec.jitter_sigma_px < 0 || spec.n_fixations < 0 || spec.distractor_rate < 0 || spec.samples_per_burst <= 0 ||
        !(spec.sample_interval_ms > 0) || spec.saccade_ms < 0)
        throw Error(ErrorCode::InvalidParameter, "invalid gaze simulation parameters");

    std::vector<Point2d> targets;
    for (const auto& comp : connected_components(gt)) {
        Point2d c;
        for (const auto& p : comp.pixels) {
            c.x += p.x;
            c.y += p.y;
        }
        c.x /= static_cast<double>(comp.pixels.size());
        c.y /= static_cast<double>(comp.pixels.size());
        for (int i = 0; i < spec.n_fixations; ++i) targets.push_back(c);
    }
    if (targets.empty() && !(spec.distractor_rate > 0))
        throw Error(ErrorCode::InvalidParameter, "gaze simulation needs a lesion or distractors");

    std::mt19937_64 rng(spec.seed);
    const std::size_t lesion_bursts = targets.size();
    const double base = lesion_bursts ? static_cast<double>(lesion_bursts) : static_cast<double>(std::max(spec.n_fixations, 1));
    const auto n_distract = static_cast<std::size_t>(std::lround(spec.distractor_rate * base));
    if (n_distract > 0) {
        const auto dark = dark_field_pixels(frame, gt);
        std::uniform_int_distribution<std::size_t> pick(0, dark.empty() ? frame.size().area() - 1 : dark.size() - 1);
        for (std::size_t i = 0; i < n_distract; ++i) {
            const std::size_t k = pick(rng);
            if (dark.empty())
                targets.push_back({static_cast<double>(k % static_cast<std::size_t>(frame.width())),
                                   static_cast<double>(k / static_cast<std::size_t>(frame.width()))});
            else
                targets.push_back({static_cast<double>(dark[k].x), static_cast<double>(dark[k].y)});
        }
    }
    std::shuffle(targets.begin(), targets.end(), rng);

    GazeTrace trace;
    trace.image_id = std::move(image_id);
    std::normal_distribution<double> jitter(0.0, 1.0);
    double t = 0.0;
    for (std::size_t b = 0; b < targets.size(); ++b) {
        if (b > 0) t += spec.saccade_ms;
        for (int s = 0; s < spec.samples_per_burst; ++s) {
            const double dx = spec.jitter_sigma_px * jitter(rng), dy = spec.jitter_sigma_px * jitter(rng);
            trace.samples.push_back({t, targets[b].x + dx, targets[b].y + dy, true});
            if (s + 1 < spec.samples_per_burst) t += spec.sample_interval_ms;
        }
    }
    return trace;
}

}  // namespace glanceseg
