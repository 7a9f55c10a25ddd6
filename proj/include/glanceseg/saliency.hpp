#pragma once

#include <vector>

#include "glanceseg/color.hpp"
#include "glanceseg/config.hpp"
#include "glanceseg/core.hpp"

namespace glanceseg {

enum class SaliencyMethod { FT, MBD, Combined };

const char* to_string(SaliencyMethod method);

/// Bottom-up attention map with values in [0,1].
struct SaliencyMap {
    GrayMap map;
    SaliencyMethod method = SaliencyMethod::FT;
    // Constant input: the map is all zeros and was not normalized.
    bool degenerate = false;
};

/// Smoothing taps used for the FT high-frequency cutoff. The default cutoff maps to the
/// 5-tap binomial [1 4 6 4 1]/16; other cutoffs use a sampled Gaussian with sigma scaled
/// inversely to the cutoff (sigma 1 at the default).
std::vector<double> ft_kernel(double cutoff);

/// Unnormalized frequency-tuned response: distance between the mean Lab vector and the blurred Lab image.
GrayMap ft_response(const LabImage& lab, double cutoff = kDefaultFtCutoff);
SaliencyMap ft_saliency(const Frame& roi, double cutoff = kDefaultFtCutoff);

/// One alternating forward/inverse raster-scan run of the fast barrier distance transform,
/// seeded at every border pixel. Returns the unnormalized distance.
GrayMap mbd_raster_scan(const GrayMap& gray, int max_passes);

/// Elementwise minimum of `mbd_raster_scan` over the four mirrored scan orientations.
GrayMap mbd_distance(const GrayMap& gray, int max_passes);
SaliencyMap mbd_saliency(const Frame& roi, int max_passes);

/// gamma*FT + eta*MBD, renormalized to [0,1].
SaliencyMap fuse(const SaliencyMap& ft, const SaliencyMap& mbd, double gamma, double eta);

struct SalientPoints {
    GrayMap binary;
    std::vector<PixelPoint> points;  // row-major
};

/// Quantile threshold over nonzero values; an all-zero map yields no points.
SalientPoints binarize_saliency(const SaliencyMap& map, double quantile);

}  // namespace glanceseg
