#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "glanceseg/config.hpp"
#include "glanceseg/core.hpp"
#include "glanceseg/segmenter.hpp"

namespace glanceseg {

inline constexpr int kRingRadius = 5;
inline constexpr double kCrossRoiMergeIou = 0.5;

/// Length of the outer 8-connected boundary: 1 per axial step, sqrt(2) per diagonal step.
/// Uses the first component found in row-major order. A single pixel has length 0.
double contour_perimeter(const BinaryMask& mask);

/// 4*pi*S / C^2. A single pixel is 1; a mask with more than one 4-connected component is 0.
/// Throws InvalidParameter on an empty mask.
double roundness(const BinaryMask& mask);

/// Pixels within Euclidean distance `radius` of the mask, excluding the mask itself.
BinaryMask background_ring(const BinaryMask& mask, int radius = kRingRadius);

struct ColorStats {
    bool pass = false;
    double mean_a_star = 0.0;
    double background_mean_a_star = 0.0;
};

/// Passes when mean a* of the mask is positive and above the ring's mean a*. An empty ring falls
/// back to every ROI pixel outside the mask (then the whole ROI).
ColorStats color_pass(const Frame& roi, const BinaryMask& mask, const BinaryMask& ring);

/// Population standard deviation.
double smoothness(std::span<const double> values);

/// Gray values (Rec. 601 luma on the 0..255 scale) of the mask pixels.
std::vector<double> gray_values(const Frame& roi, const BinaryMask& mask);

struct DkfRecord {
    int roi_index = 0;
    int candidate_index = 0;
    double roundness = 0.0;
    double mean_a_star = 0.0;
    double background_mean_a_star = 0.0;
    double smoothness = 0.0;
    double background_smoothness = 0.0;
    double roi_smoothness = 0.0;  // whole-ROI value, for comparison only
    bool shape = false;
    bool color = false;
    bool texture = false;
    bool accepted = false;
    double confidence = 0.0;
    BBox bbox;  // frame coordinates
    PixelPoint source_prompt;  // frame coordinates
    std::size_t area = 0;
};

struct DkfResult {
    std::vector<CandidateMask> accepted;  // frame coordinates
    std::vector<DkfRecord> records;
};

/// Evaluates one ROI-local candidate.
DkfRecord evaluate_candidate(const CandidateMask& candidate, const Frame& roi, double roundness_min,
                             double roi_smoothness);

/// Filters ROI-local candidates and maps survivors to frame coordinates via `origin`.
DkfResult apply_dkf(std::span<const CandidateMask> candidates, const Frame& roi, PixelPoint origin, Size frame_dims,
                    const PipelineConfig& config, int roi_index = 0);

/// Merges frame-coordinate masks from overlapping ROIs at IoU > 0.5, keeping the higher confidence.
std::vector<CandidateMask> merge_across_rois(std::vector<CandidateMask> masks);

/// One JSON object per line with every record field.
void write_dkf_report(std::ostream& out, std::span<const DkfRecord> records);
std::string dkf_record_json(const DkfRecord& record);

}  // namespace glanceseg
