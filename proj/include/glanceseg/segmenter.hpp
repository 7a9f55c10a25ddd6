#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glanceseg/core.hpp"
#include "glanceseg/prompts.hpp"

namespace glanceseg {

/// One candidate lesion mask in ROI coordinates.
struct CandidateMask {
    BinaryMask mask;
    double confidence = 0.0;
    PixelPoint source_prompt;

    const BBox& bbox() const { return mask.bbox(); }
};

struct BackendInfo {
    std::string name;
    std::string version;
    int max_prompts = 0;
};

/// Promptable segmentation backend. Implementations must be deterministic for identical inputs
/// and safe to call concurrently for different ROIs.
class SegmenterBackend {
public:
    virtual ~SegmenterBackend() = default;

    virtual BackendInfo info() const = 0;

    /// Zero or one mask per prompt; backends may drop duplicates.
    virtual std::vector<CandidateMask> segment(const Frame& roi, std::span<const PixelPoint> prompts) = 0;
};

inline constexpr double kMaskDedupIou = 0.9;

/// Keeps the highest-confidence mask of every group overlapping above `iou_threshold`.
/// Ties keep the earlier mask.
std::vector<CandidateMask> dedup_masks(std::vector<CandidateMask> masks, double iou_threshold);

/// Validates prompts, runs the backend, and deduplicates the result at IoU > 0.9.
std::vector<CandidateMask> segment(SegmenterBackend& backend, const Frame& roi, const PromptSet& prompts);

inline constexpr double kBaselineTolerance = 12.0 / 255.0;
inline constexpr double kBaselineAreaCap = 0.05;

/// Flood fill (4-connected) from `seed` over pixels whose luminance is within `tolerance` of the
/// seed's 3x3 mean. Regions above 5% of the ROI area, or a seed outside its own tolerance, yield no mask.
std::optional<CandidateMask> baseline_region_grow(const Frame& roi, PixelPoint seed,
                                                  double tolerance = kBaselineTolerance);

/// Built-in backend that runs `baseline_region_grow` for every prompt.
class BaselineBackend final : public SegmenterBackend {
public:
    explicit BaselineBackend(double tolerance = kBaselineTolerance) : tolerance_(tolerance) {}

    BackendInfo info() const override;
    std::vector<CandidateMask> segment(const Frame& roi, std::span<const PixelPoint> prompts) override;

private:
    double tolerance_;
};

/// "baseline" or "external:<endpoint>" (see external_backend.hpp for endpoint forms).
std::unique_ptr<SegmenterBackend> make_backend(const std::string& spec, double timeout_s = 30.0);

}  // namespace glanceseg
