#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glanceseg/ablation.hpp"
#include "glanceseg/dataset.hpp"
#include "glanceseg/eval.hpp"
#include "glanceseg/image_io.hpp"
#include "glanceseg/pipeline.hpp"
#include "glanceseg/prompts.hpp"

using namespace glanceseg;
namespace fs = std::filesystem;

namespace {

SynthSpec small_spec() {
    SynthSpec s;
    s.dims = {256, 256};
    s.n_lesions = 3;
    s.vessel_count = 4;
    s.n_exudates = 2;
    return s;
}

const Dataset& data() {
    static const Dataset ds = make_synthetic_dataset(3, 77, small_spec());
    return ds;
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("glanceseg_test_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Equal to a candidate, or absorbed into one by the cross-ROI merge.
bool represented(const std::vector<CandidateMask>& set, const BinaryMask& m) {
    for (const auto& c : set)
        if (c.mask == m || iou(c.mask, m) > 0.5) return true;
    return false;
}

}  // namespace

TEST_CASE("pipeline finds the lesions the gaze dwelt on") {
    BaselineBackend backend;
    PipelineConfig config;
    std::size_t matched = 0, lesions = 0;
    for (const auto& item : data().items) {
        const PipelineResult r = run_pipeline(item.image, item.gaze, config, backend);
        CHECK(!r.rois.empty());
        CHECK(r.prompt_count > 0);
        CHECK(r.accepted.size() <= r.candidates.size());
        for (const auto& a : r.accepted) {
            CHECK(a.mask.dims() == item.image.size());
            CHECK(represented(r.candidates, a.mask));
        }
        std::size_t passed = 0;
        for (const auto& rec : r.report) {
            CHECK(rec.accepted == (rec.shape && rec.color && rec.texture));
            passed += rec.accepted;
        }
        CHECK(r.accepted.size() <= passed);
        std::vector<BinaryMask> preds;
        for (const auto& a : r.accepted) preds.push_back(a.mask);
        const auto gts = split_components(item.gt);
        const LesionCounts lc = lesion_match(preds, gts);
        matched += lc.matched;
        lesions += gts.size();
        CHECK(r.timing.total_ms >= r.timing.segment_ms);
    }
    CHECK(lesions == 9);
    CHECK(matched >= 8);
}

TEST_CASE("pipeline output is deterministic") {
    BaselineBackend backend;
    const auto& item = data().items[1];
    const PipelineResult a = run_pipeline(item.image, item.gaze, PipelineConfig{}, backend);
    const PipelineResult b = run_pipeline(item.image, item.gaze, PipelineConfig{}, backend);
    REQUIRE(a.accepted.size() == b.accepted.size());
    for (std::size_t i = 0; i < a.accepted.size(); ++i) {
        CHECK(a.accepted[i].mask == b.accepted[i].mask);
        CHECK(a.accepted[i].confidence == b.accepted[i].confidence);
    }
    CHECK(a.prompt_count == b.prompt_count);
    CHECK(a.report.size() == b.report.size());
}

TEST_CASE("pipeline input errors") {
    BaselineBackend backend;
    const auto& item = data().items[0];
    GazeTrace none;
    CHECK_THROWS_AS(run_pipeline(item.image, none, PipelineConfig{}, backend), Error);
    GazeMap wrong = build_gaze_map(item.gaze, {128, 128}, 25.0);
    try {
        run_pipeline(item.image, wrong, PipelineConfig{}, backend);
        FAIL("expected a dimension error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
    PipelineConfig bad;
    bad.grid_N = 1;
    CHECK_THROWS_AS(run_pipeline(item.image, item.gaze, bad, backend), Error);
}

TEST_CASE("prompt modes control the prompt count") {
    BaselineBackend backend;
    PipelineConfig config;
    const auto& item = data().items[0];
    PipelineOptions full, dense, sal;
    full.mode = PromptMode::FullCoverage;
    dense.mode = PromptMode::DenseGrid;
    dense.dense_grid_n = 30;
    const PipelineResult rf = run_pipeline(item.image, item.gaze, config, backend, full);
    const PipelineResult rd = run_pipeline(item.image, item.gaze, config, backend, dense);
    const PipelineResult rs = run_pipeline(item.image, item.gaze, config, backend, sal);
    std::size_t want_full = 0, want_dense = 0;
    for (const auto& roi : rf.rois) {
        want_full += make_grid(roi.crop.size(), config.grid_N).size();
        want_dense += make_grid(roi.crop.size(), 30).size();
    }
    CHECK(rf.prompt_count == want_full);
    CHECK(rd.prompt_count == want_dense);
    CHECK(rs.prompt_count < rf.prompt_count);
    // Dense prompts skip the filter stage only in the ablation, not here.
    CHECK(rd.report.size() > 0);
}

TEST_CASE("debug dumps cover every stage") {
    BaselineBackend backend;
    const auto& item = data().items[0];
    PipelineOptions opts;
    opts.debug_dir = scratch("debug");
    const PipelineResult r = run_pipeline(item.image, item.gaze, PipelineConfig{}, backend, opts);
    for (std::string name : {"gaze_map.png", "gaze_binary.png"}) CHECK(fs::exists(opts.debug_dir / name));
    for (std::size_t k = 0; k < r.rois.size(); ++k)
        for (std::string stage : {"crop", "enhanced", "ft", "mbd", "fused", "salient"})
            CHECK(fs::exists(opts.debug_dir / ("roi" + std::to_string(k) + "_" + stage + ".png")));
    const Frame crop = read_image(opts.debug_dir / "roi0_crop.png");
    CHECK(std::ranges::equal(crop.pixels(), r.rois[0].crop.pixels()));
    fs::remove_all(opts.debug_dir);
}

TEST_CASE("union mask and overlay") {
    const Size dims{10, 8};
    const std::vector<PixelPoint> pa = {{1, 1}, {2, 1}}, pb = {{2, 1}, {5, 5}}, pc = {{1, 1}};
    std::vector<CandidateMask> ms = {
        {BinaryMask::from_pixels(dims, pa), 0.5, {1, 1}},
        {BinaryMask::from_pixels(dims, pb), 0.7, {5, 5}},
    };
    const BinaryMask u = union_mask(ms, dims);
    CHECK(u.area() == 3);
    CHECK(u.at(5, 5));
    CHECK(union_mask({}, dims).area() == 0);
    std::vector<CandidateMask> wrong = {{BinaryMask::from_pixels({4, 4}, pc), 1.0, {1, 1}}};
    CHECK_THROWS_AS(union_mask(wrong, dims), Error);

    BaselineBackend backend;
    const auto& item = data().items[0];
    const PipelineResult r = run_pipeline(item.image, item.gaze, PipelineConfig{}, backend);
    const Frame ov = render_overlay(item.image, r);
    REQUIRE(ov.size() == item.image.size());
    const BBox b = r.rois[0].box();
    CHECK(ov.at(b.x, b.y, 0) == 255);
    CHECK(ov.at(b.x, b.y, 1) == 220);
    CHECK(ov.at(b.x, b.y, 2) == 0);
    for (const auto& a : r.accepted) {
        // Every accepted mask has at least one green outline pixel.
        bool green = false;
        for (const auto& p : a.mask.pixels()) green |= ov.at(p.x, p.y, 0) == 0 && ov.at(p.x, p.y, 1) == 255 && ov.at(p.x, p.y, 2) == 0;
        CHECK(green);
    }
}

TEST_CASE("ablation arms and their files") {
    BaselineBackend backend;
    Dataset ds = data();
    // An item whose trace deposits nothing is scored with no predictions.
    DatasetItem blank = ds.items[0];
    blank.id = "synth_blank";
    blank.gaze.samples.clear();
    ds.items.push_back(blank);
    std::ostringstream log;
    const AblationResult r = ablation_run(ds, PipelineConfig{}, backend, 40, &log);
    CHECK(log.str().find("synth_blank") != std::string::npos);
    for (const EvalReport* e : {&r.dense_grid, &r.saliency, &r.saliency_dkf}) {
        CHECK(e->images == 4);
        CHECK(e->per_image.back().predictions == 0);
    }
    CHECK(r.saliency_dkf.predictions <= r.saliency.predictions);
    CHECK(r.saliency.prompt_count == r.saliency_dkf.prompt_count);
    CHECK(r.saliency_dkf.aupr >= r.saliency.aupr);
    CHECK(r.saliency.dice >= r.dense_grid.dice);

    const fs::path dir = scratch("ablation");
    write_ablation(dir, r);
    for (std::string arm : {"dense_grid", "saliency", "saliency_dkf"}) {
        CHECK(slurp(dir / ("ablation_" + arm + ".json")) == to_json(arm == "dense_grid" ? r.dense_grid
                                                                   : arm == "saliency" ? r.saliency
                                                                                       : r.saliency_dkf));
        CHECK(fs::exists(dir / ("timing_" + arm + ".json")));
        CHECK(slurp(dir / ("pr_" + arm + ".tsv")).starts_with("recall\tprecision\n"));
    }
    const std::string combined = slurp(dir / "pr_combined.tsv");
    CHECK(combined.starts_with("arm\trecall\tprecision\n"));
    CHECK(combined.find("\nsaliency_dkf\t") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("n sweep grows with N and writes a table") {
    BaselineBackend backend;
    Dataset ds;
    ds.items.push_back(data().items[2]);
    const std::vector<int> ns = {10, 20, 40};
    const auto rows = n_sweep(ds, PipelineConfig{}, backend, ns);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].n == ns[i]);
        CHECK(rows[i].mean_prompts == static_cast<double>(rows[i].prompt_count));
        if (i) CHECK(rows[i].prompt_count > rows[i - 1].prompt_count);
    }
    const fs::path dir = scratch("sweep");
    write_n_sweep(dir, rows);
    const std::string table = slurp(dir / "n_sweep.tsv");
    CHECK(table.starts_with("N\timages\tprompt_count\tmean_prompts_per_image\tmean_time_ms\taupr\n"));
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);
    for (int n : ns) CHECK(fs::exists(dir / ("n_sweep_" + std::to_string(n) + ".json")));
    fs::remove_all(dir);
    const std::vector<int> bad = {1};
    CHECK_THROWS_AS(n_sweep(ds, PipelineConfig{}, backend, bad), Error);
}
