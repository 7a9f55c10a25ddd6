#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "glanceseg/config.hpp"
#include "glanceseg/dataset.hpp"
#include "glanceseg/eval.hpp"
#include "glanceseg/segmenter.hpp"

namespace glanceseg {

struct AblationResult {
    EvalReport dense_grid;    // dense grid prompts, no saliency
    EvalReport saliency;      // saliency prompts
    EvalReport saliency_dkf;  // saliency prompts + domain filter
};

/// The saliency and saliency+filter arms share one segmentation pass per image.
AblationResult ablation_run(const Dataset& dataset, const PipelineConfig& config, SegmenterBackend& backend,
                            int dense_grid_n = 200, std::ostream* log = nullptr);

struct NSweepRow {
    int n = 0;
    std::size_t prompt_count = 0;
    double mean_prompts = 0.0;
    double mean_time_ms = 0.0;
    EvalReport report;
};

/// Full-coverage saliency pipeline for each grid N; reports prompt counts and time.
std::vector<NSweepRow> n_sweep(const Dataset& dataset, const PipelineConfig& config, SegmenterBackend& backend,
                               std::span<const int> ns, std::ostream* log = nullptr);

/// ablation_<arm>.json, pr_<arm>.tsv, pr_combined.tsv and timing_<arm>.json.
void write_ablation(const std::filesystem::path& dir, const AblationResult& result);

/// n_sweep.tsv plus n_sweep_<N>.json per N.
void write_n_sweep(const std::filesystem::path& dir, std::span<const NSweepRow> rows);

}  // namespace glanceseg
