#pragma once

#include <filesystem>
#include <istream>
#include <numbers>
#include <optional>
#include <string>

#include "glanceseg/core.hpp"

namespace glanceseg {

inline constexpr double kDefaultFtCutoff = std::numbers::pi / 2.75;

struct PipelineConfig {
    // Viewing geometry (only used by sigma_from_geometry).
    double theta_deg = 1.0;
    double distance_R_cm = 60.0;
    Size monitor_px{1920, 1080};
    double monitor_cm_w = 64.0;
    double monitor_cm_h = 48.0;

    double sigma_px = 25.0;
    double gaze_binarize_quantile = 0.85;

    int roi_min_M = 128;
    double enhance_alpha = 4.0;
    double enhance_beta = -4.0;
    double enhance_lambda = 128.0;
    // Unset means M/30 for each ROI.
    std::optional<double> enhance_blur_sigma;

    double ft_cutoff = kDefaultFtCutoff;
    double fusion_gamma = 0.5;
    double fusion_eta = 0.5;
    double saliency_binarize_quantile = 0.90;

    int grid_N = 100;
    double dkf_roundness_min = 0.8;
    int mbd_max_passes = 10;

    double blur_sigma_for(int roi_size) const {
        return enhance_blur_sigma ? *enhance_blur_sigma : static_cast<double>(roi_size) / 30.0;
    }

    /// Throws InvalidParameter naming the first offending field.
    void validate() const;

    bool operator==(const PipelineConfig&) const = default;
};

/// Gaze Gaussian width in screen pixels implied by visual-angle error and viewing distance.
double sigma_from_geometry(double theta_deg, double distance_R_cm, Size monitor_px, double monitor_cm_w,
                           double monitor_cm_h);

/// Flat `key = value` text, one field per line, `#` comments. Unknown keys throw Parse naming the key.
PipelineConfig parse_config(std::istream& in, const std::string& source_name = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);
std::string format_config(const PipelineConfig& config);
void save_config(const std::filesystem::path& path, const PipelineConfig& config);

}  // namespace glanceseg
