#include "glanceseg/ablation.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "glanceseg/pipeline.hpp"

namespace glanceseg {
namespace {

namespace fs = std::filesystem;

// Runs the pipeline; an image whose trace deposits nothing yields no predictions.
std::optional<PipelineResult> run_item(const DatasetItem& item, const PipelineConfig& config, SegmenterBackend& backend,
                                       const PipelineOptions& options, std::ostream* log) {
    try {
        return run_pipeline(item.image, item.gaze, config, backend, options);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyTrace && e.code() != ErrorCode::EmptyMap) throw;
        if (log) *log << item.id << ": " << e.what() << "; no predictions\n";
        return std::nullopt;
    }
}

std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

}  // namespace

AblationResult ablation_run(const Dataset& dataset, const PipelineConfig& config, SegmenterBackend& backend,
                            int dense_grid_n, std::ostream* log) {
    Evaluator dense("dense_grid"), sal("saliency"), dkf("saliency_dkf");
    for (const auto& item : dataset.items) {
        PipelineOptions dense_opts;
        dense_opts.mode = PromptMode::DenseGrid;
        dense_opts.dense_grid_n = dense_grid_n;
        if (auto r = run_item(item, config, backend, dense_opts, log))
            dense.add(item.id, r->candidates, item.gt, r->prompt_count, r->timing);
        else
            dense.add(item.id, {}, item.gt);

        if (auto r = run_item(item, config, backend, {}, log)) {
            sal.add(item.id, r->candidates, item.gt, r->prompt_count, r->timing);
            dkf.add(item.id, r->accepted, item.gt, r->prompt_count, r->timing);
        } else {
            sal.add(item.id, {}, item.gt);
            dkf.add(item.id, {}, item.gt);
        }
    }
    return {dense.report(), sal.report(), dkf.report()};
}

std::vector<NSweepRow> n_sweep(const Dataset& dataset, const PipelineConfig& config, SegmenterBackend& backend,
                               std::span<const int> ns, std::ostream* log) {
    std::vector<NSweepRow> rows;
    for (int n : ns) {
        PipelineConfig c = config;
        c.grid_N = n;
        c.validate();
        Evaluator ev("n_sweep_" + std::to_string(n));
        PipelineOptions opts;
        opts.mode = PromptMode::FullCoverage;
        for (const auto& item : dataset.items) {
            if (auto r = run_item(item, c, backend, opts, log))
                ev.add(item.id, r->accepted, item.gt, r->prompt_count, r->timing);
            else
                ev.add(item.id, {}, item.gt);
        }
        NSweepRow row;
        row.n = n;
        row.report = ev.report();
        row.prompt_count = row.report.prompt_count;
        const double images = std::max<double>(1.0, static_cast<double>(row.report.images));
        row.mean_prompts = static_cast<double>(row.prompt_count) / images;
        row.mean_time_ms = row.report.timing.total_ms / images;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_ablation(const fs::path& dir, const AblationResult& result) {
    fs::create_directories(dir);
    std::ofstream combined(dir / "pr_combined.tsv", std::ios::binary);
    combined << "arm\trecall\tprecision\n";
    for (const EvalReport* r : {&result.dense_grid, &result.saliency, &result.saliency_dkf}) {
        write_text(dir / ("ablation_" + r->label + ".json"), to_json(*r));
        write_text(dir / ("timing_" + r->label + ".json"), timing_json(*r));
        std::ofstream table(dir / ("pr_" + r->label + ".tsv"), std::ios::binary);
        write_pr_table(table, r->pr_curve);
        for (const auto& p : r->pr_curve) combined << r->label << '\t' << shortest(p.recall) << '\t' << shortest(p.precision) << '\n';
    }
    if (!combined) throw Error(ErrorCode::Io, "cannot write " + (dir / "pr_combined.tsv").string());
}

void write_n_sweep(const fs::path& dir, std::span<const NSweepRow> rows) {
    fs::create_directories(dir);
    std::string table = "N\timages\tprompt_count\tmean_prompts_per_image\tmean_time_ms\taupr\n";
    for (const auto& r : rows) {
        table += std::to_string(r.n) + '\t' + std::to_string(r.report.images) + '\t' + std::to_string(r.prompt_count) +
                 '\t' + shortest(r.mean_prompts) + '\t' + shortest(r.mean_time_ms) + '\t' + shortest(r.report.aupr) + '\n';
        write_text(dir / ("n_sweep_" + std::to_string(r.n) + ".json"), to_json(r.report));
    }
    write_text(dir / "n_sweep.tsv", table);
}

}  // namespace glanceseg
