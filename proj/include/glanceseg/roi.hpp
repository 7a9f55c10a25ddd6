#pragma once

#include <vector>

#include "glanceseg/config.hpp"
#include "glanceseg/core.hpp"
#include "glanceseg/gaze.hpp"

namespace glanceseg {

/// Square crop around one high-attention region.
struct Roi {
    PixelPoint origin;  // top-left in frame coordinates
    int size = 0;       // side length M
    Frame crop;
    // Gaze mass of the attention component the ROI was built from.
    double attention_mass = 0.0;
    Point2d center;  // gaze-mass centroid of that component
    BBox component_box;

    BBox box() const { return {origin.x, origin.y, size, size}; }
};

/// Side length for a component: max(min_size, 2*ceil(sqrt(area)), span needed to cover the
/// component's bounding box around `center`), clamped to the smaller frame dimension.
int roi_side(std::size_t area, const BBox& component_box, Point2d center, int min_size, Size frame);

/// One ROI per 4-connected component of `binary_attention`, ordered by descending attention mass.
std::vector<Roi> extract_rois(const GrayMap& binary_attention, const GazeMap& gaze, const Frame& frame,
                              const PipelineConfig& config);

/// out = clamp(alpha*I + beta*(I * G_sigma) + lambda, 0, 255) per channel, edge-replicated blur.
Frame enhance(const Frame& crop, double alpha, double beta, double lambda, double blur_sigma);
Frame enhance(const Roi& roi, const PipelineConfig& config);

}  // namespace glanceseg
