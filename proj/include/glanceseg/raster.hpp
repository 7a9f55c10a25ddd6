#pragma once

#include <span>
#include <vector>

#include "glanceseg/core.hpp"

namespace glanceseg {

struct Component {
    std::vector<PixelPoint> pixels;  // row-major order
    BBox box;
};

/// 4-connected components of the nonzero pixels, ordered by their first pixel in row-major order.
std::vector<Component> connected_components(const GrayMap& binary);
std::vector<Component> connected_components(const BinaryMask& mask);

/// Threshold at the `quantile` of the nonzero values (nearest-rank, index floor(q*n)).
/// Returns 0 when the map has no nonzero value.
double nonzero_quantile(const GrayMap& map, double quantile);

/// Pixels >= threshold become 1, others 0.
GrayMap threshold_at_least(const GrayMap& map, double threshold);

/// Normalized 1-D Gaussian taps with radius ceil(3*sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable convolution with the same odd-length kernel along both axes, edge replication at borders.
GrayMap convolve_separable(const GrayMap& in, std::span<const double> kernel);

/// Min-max rescale to [0,1]. Returns false (and leaves the map all-zero) when max - min <= eps.
bool normalize_min_max(GrayMap& map, double eps = 1e-9);

GrayMap flip_horizontal(const GrayMap& in);
GrayMap flip_vertical(const GrayMap& in);

}  // namespace glanceseg
