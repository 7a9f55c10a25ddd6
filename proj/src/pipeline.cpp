#include "glanceseg/pipeline.hpp"

#include <chrono>

#include "glanceseg/image_io.hpp"
#include "glanceseg/prompts.hpp"
#include "glanceseg/saliency.hpp"

namespace glanceseg {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) { return std::chrono::duration<double, std::milli>(Clock::now() - t).count(); }

void dump(const PipelineOptions& o, const std::string& name, const GrayMap& map) {
    if (!o.debug_dir.empty()) write_png16(o.debug_dir / name, map);
}

void dump(const PipelineOptions& o, const std::string& name, const Frame& frame) {
    if (!o.debug_dir.empty()) write_png(o.debug_dir / name, frame);
}

void outline(Frame& out, const BinaryMask& mask, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (const auto& p : mask.pixels()) {
        const bool edge = !mask.at(p.x - 1, p.y) || !mask.at(p.x + 1, p.y) || !mask.at(p.x, p.y - 1) ||
                          !mask.at(p.x, p.y + 1);
        if (edge) out.set(p.x, p.y, r, g, b);
    }
}

}  // namespace

PipelineResult run_pipeline(const Frame& frame, const GazeMap& gaze, const PipelineConfig& config,
                            SegmenterBackend& backend, const PipelineOptions& options) {
    config.validate();
    if (gaze.map.size() != frame.size()) throw Error(ErrorCode::DimensionMismatch, "gaze map does not match frame");
    if (!options.debug_dir.empty()) std::filesystem::create_directories(options.debug_dir);
    const auto start = Clock::now();
    PipelineResult out;

    auto t = Clock::now();
    const GrayMap attention = binarize_gaze(gaze, config.gaze_binarize_quantile);
    out.rois = extract_rois(attention, gaze, frame, config);
    out.timing.roi_ms = ms_since(t);
    dump(options, "gaze_map.png", gaze.map);
    dump(options, "gaze_binary.png", attention);

    std::vector<CandidateMask> all_candidates;
    std::vector<CandidateMask> all_accepted;
    for (std::size_t k = 0; k < out.rois.size(); ++k) {
        const Roi& roi = out.rois[k];
        const std::string tag = "roi" + std::to_string(k) + "_";
        dump(options, tag + "crop.png", roi.crop);

        PromptSet prompts;
        if (options.mode == PromptMode::DenseGrid) {
            t = Clock::now();
            prompts = {make_grid(roi.crop.size(), options.dense_grid_n), options.dense_grid_n, roi.crop.size()};
            out.timing.prompts_ms += ms_since(t);
        } else {
            t = Clock::now();
            const Frame enhanced = enhance(roi, config);
            const SaliencyMap ft = ft_saliency(enhanced, config.ft_cutoff);
            const SaliencyMap mbd = mbd_saliency(enhanced, config.mbd_max_passes);
            const SaliencyMap fused = fuse(ft, mbd, config.fusion_gamma, config.fusion_eta);
            const SalientPoints salient = binarize_saliency(fused, config.saliency_binarize_quantile);
            out.timing.saliency_ms += ms_since(t);
            dump(options, tag + "enhanced.png", enhanced);
            dump(options, tag + "ft.png", ft.map);
            dump(options, tag + "mbd.png", mbd.map);
            dump(options, tag + "fused.png", fused.map);
            dump(options, tag + "salient.png", salient.binary);

            t = Clock::now();
            const auto grid = make_grid(roi.crop.size(), config.grid_N);
            if (options.mode == PromptMode::FullCoverage)
                prompts = {grid, config.grid_N, roi.crop.size()};
            else
                prompts = intersect(grid, salient.points, roi.crop.size(), config.grid_N);
            out.timing.prompts_ms += ms_since(t);
        }
        out.prompt_count += prompts.points.size();

        t = Clock::now();
        const auto candidates = segment(backend, roi.crop, prompts);
        out.timing.segment_ms += ms_since(t);

        t = Clock::now();
        DkfResult filtered = apply_dkf(candidates, roi.crop, roi.origin, frame.size(), config, static_cast<int>(k));
        out.timing.dkf_ms += ms_since(t);

        for (const auto& c : candidates)
            all_candidates.push_back({c.mask.translated(roi.origin, frame.size()), c.confidence,
                                      {c.source_prompt.x + roi.origin.x, c.source_prompt.y + roi.origin.y}});
        for (auto& a : filtered.accepted) all_accepted.push_back(std::move(a));
        for (auto& r : filtered.records) out.report.push_back(r);
    }

    t = Clock::now();
    out.candidates = merge_across_rois(std::move(all_candidates));
    out.accepted = merge_across_rois(std::move(all_accepted));
    out.timing.dkf_ms += ms_since(t);
    out.timing.total_ms = ms_since(start);
    return out;
}

PipelineResult run_pipeline(const Frame& frame, const GazeTrace& trace, const PipelineConfig& config,
                            SegmenterBackend& backend, const PipelineOptions& options) {
    config.validate();
    const auto t = Clock::now();
    const GazeMap gaze = build_gaze_map(trace, frame.size(), config.sigma_px);
    const double gaze_ms = ms_since(t);
    PipelineResult r = run_pipeline(frame, gaze, config, backend, options);
    r.timing.gaze_ms = gaze_ms;
    r.timing.total_ms += gaze_ms;
    return r;
}

BinaryMask union_mask(std::span<const CandidateMask> masks, Size dims) {
    std::vector<std::uint8_t> bits(dims.area(), 0);
    for (const auto& m : masks) {
        if (m.mask.dims() != dims) throw Error(ErrorCode::DimensionMismatch, "mask raster differs from union raster");
        for (const auto& p : m.mask.pixels())
            bits[static_cast<std::size_t>(p.y) * static_cast<std::size_t>(dims.width) + static_cast<std::size_t>(p.x)] = 1;
    }
    return BinaryMask(dims, {0, 0, dims.width, dims.height}, std::move(bits));
}

Frame render_overlay(const Frame& frame, const PipelineResult& result) {
    Frame out = frame;
    for (const auto& roi : result.rois) {
        const BBox b = roi.box();
        for (int x = b.x; x < b.x + b.width; ++x) {
            out.set(x, b.y, 255, 220, 0);
            out.set(x, b.y + b.height - 1, 255, 220, 0);
        }
        for (int y = b.y; y < b.y + b.height; ++y) {
            out.set(b.x, y, 255, 220, 0);
            out.set(b.x + b.width - 1, y, 255, 220, 0);
        }
    }
    for (const auto& c : result.candidates) {
        bool kept = false;
        for (const auto& a : result.accepted)
            if (a.mask == c.mask) kept = true;
        if (!kept) outline(out, c.mask, 255, 0, 0);
    }
    for (const auto& a : result.accepted) outline(out, a.mask, 0, 255, 0);
    return out;
}

}  // namespace glanceseg
