#pragma once

#include <filesystem>
#include <vector>

#include "glanceseg/config.hpp"
#include "glanceseg/core.hpp"
#include "glanceseg/dkf.hpp"
#include "glanceseg/gaze.hpp"
#include "glanceseg/roi.hpp"
#include "glanceseg/segmenter.hpp"

namespace glanceseg {

enum class PromptMode {
    Saliency,      // grid intersected with the binarized fused saliency
    DenseGrid,     // dense grid on the ROI, no saliency
    FullCoverage,  // saliency is computed but every grid point is kept
};

struct PipelineOptions {
    PromptMode mode = PromptMode::Saliency;
    int dense_grid_n = 200;
    // Intermediate maps are written here as PNG files when set.
    std::filesystem::path debug_dir;
};

struct StageTiming {
    double gaze_ms = 0.0;
    double roi_ms = 0.0;
    double saliency_ms = 0.0;
    double prompts_ms = 0.0;
    double segment_ms = 0.0;
    double dkf_ms = 0.0;
    double total_ms = 0.0;
};

struct PipelineResult {
    std::vector<Roi> rois;
    // Segmenter output in frame coordinates, merged across ROIs, before the filter.
    std::vector<CandidateMask> candidates;
    // Filter survivors in frame coordinates, merged across ROIs.
    std::vector<CandidateMask> accepted;
    std::vector<DkfRecord> report;
    std::size_t prompt_count = 0;
    StageTiming timing;
};

/// ROIs -> enhancement -> saliency -> prompts -> segmentation -> domain filter.
PipelineResult run_pipeline(const Frame& frame, const GazeMap& gaze, const PipelineConfig& config,
                            SegmenterBackend& backend, const PipelineOptions& options = {});

/// Builds the gaze map first; throws EmptyTrace when no sample can be deposited.
PipelineResult run_pipeline(const Frame& frame, const GazeTrace& trace, const PipelineConfig& config,
                            SegmenterBackend& backend, const PipelineOptions& options = {});

/// Union of the masks over a raster of `dims`.
BinaryMask union_mask(std::span<const CandidateMask> masks, Size dims);

/// Frame with ROI boxes in yellow, accepted mask outlines in green and rejected candidates in red.
Frame render_overlay(const Frame& frame, const PipelineResult& result);

}  // namespace glanceseg
