#include "glanceseg/roi.hpp"

#include <algorithm>
#include <cmath>

#include "glanceseg/raster.hpp"

namespace glanceseg {

int roi_side(std::size_t area, const BBox& box, Point2d center, int min_size, Size frame) {
    int side = std::max(min_size, 2 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(area)))));
    // Cover the component box when the ROI is centered on `center`.
    const double reach = std::max({center.x - box.x, box.x + box.width - 1 - center.x, center.y - box.y,
                                   box.y + box.height - 1 - center.y});
    side = std::max(side, 2 * static_cast<int>(std::ceil(reach)) + 2);
    return std::min(side, std::min(frame.width, frame.height));
}

std::vector<Roi> extract_rois(const GrayMap& binary, const GazeMap& gaze, const Frame& frame,
                              const PipelineConfig& config) {
    if (binary.size() != frame.size() || gaze.map.size() != frame.size())
        throw Error(ErrorCode::DimensionMismatch, "attention map and frame dimensions differ");

    std::vector<Roi> rois;
    for (const auto& comp : connected_components(binary)) {
        double mass = 0.0, cx = 0.0, cy = 0.0;
        for (const auto& p : comp.pixels) {
            const double w = gaze.map.at(p.x, p.y);
            mass += w;
            cx += w * p.x;
            cy += w * p.y;
        }
        Point2d center;
        if (mass > 0) {
            center = {cx / mass, cy / mass};
        } else {
            for (const auto& p : comp.pixels) {
                center.x += p.x;
                center.y += p.y;
            }
            center.x /= static_cast<double>(comp.pixels.size());
            center.y /= static_cast<double>(comp.pixels.size());
        }

        const int side = roi_side(comp.pixels.size(), comp.box, center, config.roi_min_M, frame.size());
        const int ox = std::clamp(static_cast<int>(std::floor(center.x - side / 2.0 + 0.5)), 0, frame.width() - side);
        const int oy = std::clamp(static_cast<int>(std::floor(center.y - side / 2.0 + 0.5)), 0, frame.height() - side);

        Roi roi;
        roi.origin = {ox, oy};
        roi.size = side;
        roi.crop = frame.crop(roi.box());
        roi.attention_mass = mass;
        roi.center = center;
        roi.component_box = comp.box;
        rois.push_back(std::move(roi));
    }
    std::stable_sort(rois.begin(), rois.end(),
                     [](const Roi& a, const Roi& b) { return a.attention_mass > b.attention_mass; });
    return rois;
}

Frame enhance(const Frame& crop, double alpha, double beta, double lambda, double blur_sigma) {
    if (crop.empty()) throw Error(ErrorCode::InvalidParameter, "cannot enhance an empty crop");
    const auto kernel = gaussian_kernel(blur_sigma);
    Frame out(crop.width(), crop.height());
    for (int c = 0; c < 3; ++c) {
        GrayMap channel(crop.width(), crop.height());
        for (int y = 0; y < crop.height(); ++y)
            for (int x = 0; x < crop.width(); ++x) channel.at(x, y) = crop.at(x, y, c);
        const GrayMap blurred = convolve_separable(channel, kernel);
        for (int y = 0; y < crop.height(); ++y)
            for (int x = 0; x < crop.width(); ++x) {
                const double v = alpha * channel.at(x, y) + beta * blurred.at(x, y) + lambda;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
    }
    return out;
}

Frame enhance(const Roi& roi, const PipelineConfig& config) {
    return enhance(roi.crop, config.enhance_alpha, config.enhance_beta, config.enhance_lambda,
                   config.blur_sigma_for(roi.size));
}

}  // namespace glanceseg
