#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "../support/oracles.hpp"
#include "glanceseg/dataset.hpp"
#include "glanceseg/dkf.hpp"
#include "glanceseg/gaze_sim.hpp"
#include "glanceseg/raster.hpp"
#include "glanceseg/roi.hpp"
#include "glanceseg/synth.hpp"

using namespace glanceseg;
namespace fs = std::filesystem;

namespace {

// Pixels within half the stroke width of the centerline between t0 and t1.
BinaryMask stroke_fragment(const SynthVessel& v, double t0, double t1, Size dims) {
    std::vector<Point2d> c;
    for (int i = 0; i <= 400; ++i) c.push_back(v.at(t0 + (t1 - t0) * i / 400.0));
    double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
    for (const auto& p : c) x0 = std::min(x0, p.x), y0 = std::min(y0, p.y), x1 = std::max(x1, p.x), y1 = std::max(y1, p.y);
    const int r = static_cast<int>(std::ceil(v.width)) + 1;
    std::vector<PixelPoint> px;
    for (int y = std::max(0, static_cast<int>(y0) - r); y <= std::min(dims.height - 1, static_cast<int>(y1) + r); ++y)
        for (int x = std::max(0, static_cast<int>(x0) - r); x <= std::min(dims.width - 1, static_cast<int>(x1) + r); ++x)
            for (const auto& p : c)
                if (std::hypot(p.x - x, p.y - y) <= v.width / 2) {
                    px.push_back({x, y});
                    break;
                }
    return BinaryMask::from_pixels(dims, px);
}

double arc_length(const SynthVessel& v, double t0, double t1) {
    double len = 0.0;
    Point2d prev = v.at(t0);
    for (int i = 1; i <= 400; ++i) {
        const Point2d q = v.at(t0 + (t1 - t0) * i / 400.0);
        len += std::hypot(q.x - prev.x, q.y - prev.y);
        prev = q;
    }
    return len;
}

// Crop of `side` pixels around a point, clamped to the frame.
std::pair<Frame, PixelPoint> crop_around(const Frame& f, Point2d c, int side) {
    const int x = std::clamp(static_cast<int>(c.x) - side / 2, 0, f.width() - side);
    const int y = std::clamp(static_cast<int>(c.y) - side / 2, 0, f.height() - side);
    return {f.crop({x, y, side, side}), {x, y}};
}

}  // namespace

TEST_CASE("generated image has one ground-truth component per lesion") {
    for (std::uint64_t seed : {1u, 2u, 3u, 10u}) {
        SynthSpec s;
        s.seed = seed;
        SynthImage img = generate(s);
        CHECK(img.image.size() == s.dims);
        CHECK(img.gt.dims() == s.dims);
        CHECK(img.lesions.size() == 5);
        CHECK(connected_components(img.gt).size() == 5);
        CHECK(img.vessels.size() == 6);
        CHECK(img.exudates.size() == 2);
        for (const auto& l : img.lesions) {
            CHECK(l.radius >= s.lesion_radius_min);
            CHECK(l.radius <= s.lesion_radius_max);
            CHECK(std::hypot(l.center.x - img.fundus.center.x, l.center.y - img.fundus.center.y) < img.fundus.radius);
        }
    }
}

TEST_CASE("generation is deterministic per seed") {
    SynthSpec s;
    s.seed = 77;
    SynthImage a = generate(s), b = generate(s);
    CHECK(a.image == b.image);
    CHECK(a.gt == b.gt);
    s.seed = 78;
    CHECK_FALSE(generate(s).image == a.image);
}

TEST_CASE("ground truth marks pixels at least half covered by a lesion") {
    SynthSpec s;
    s.seed = 5;
    SynthImage img = generate(s);
    for (const auto& l : img.lesions) {
        const int r = static_cast<int>(std::ceil(l.radius)) + 1;
        for (int y = static_cast<int>(l.center.y) - r; y <= static_cast<int>(l.center.y) + r; ++y)
            for (int x = static_cast<int>(l.center.x) - r; x <= static_cast<int>(l.center.x) + r; ++x)
                if (disk_coverage(l, x, y) >= 0.5) CHECK(img.gt.at(x, y));
    }
}

TEST_CASE("disk coverage") {
    SynthDisk d{{10, 10}, 3};
    CHECK(disk_coverage(d, 10, 10) == 1.0);
    CHECK(disk_coverage(d, 20, 20) == 0.0);
    const double edge = disk_coverage(d, 13, 10);
    CHECK(edge > 0.0);
    CHECK(edge < 1.0);
}

TEST_CASE("every generated lesion passes the domain filter in isolation") {
    PipelineConfig c;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SynthSpec s;
        s.seed = seed;
        SynthImage img = generate(s);
        for (const auto& comp : connected_components(img.gt)) {
            Point2d ctr{static_cast<double>(comp.box.x) + comp.box.width / 2.0, static_cast<double>(comp.box.y) + comp.box.height / 2.0};
            auto [roi, origin] = crop_around(img.image, ctr, 64);
            std::vector<PixelPoint> local;
            for (auto p : comp.pixels) local.push_back({p.x - origin.x, p.y - origin.y});
            CandidateMask cand{BinaryMask::from_pixels(roi.size(), local), 1.0, local.front()};
            DkfResult r = apply_dkf(std::span(&cand, 1), roi, origin, img.image.size(), c);
            REQUIRE(r.records.size() == 1);
            CHECK_MESSAGE(r.records[0].accepted, "seed " << seed << " roundness " << r.records[0].roundness << " color "
                                                         << r.records[0].color << " texture " << r.records[0].texture);
        }
    }
}

TEST_CASE("vessel fragments at least four widths long fail the roundness test") {
    PipelineConfig c;
    SynthSpec s;
    s.seed = 3;
    SynthImage img = generate(s);
    int checked = 0;
    for (const auto& v : img.vessels) {
        for (double t0 : {0.1, 0.4, 0.7}) {
            double t1 = t0;
            while (t1 < 1.0 && arc_length(v, t0, t1) < 4 * v.width) t1 += 0.005;
            if (t1 > 1.0) continue;
            BinaryMask frag = stroke_fragment(v, t0, t1, img.image.size());
            auto comps = connected_components(frag);
            REQUIRE(comps.size() == 1);
            CHECK(roundness(frag) < c.dkf_roundness_min);
            ++checked;
        }
    }
    CHECK(checked >= 6);
}

TEST_CASE("synth spec validation") {
    SynthSpec s;
    s.dims = {32, 32};
    CHECK_THROWS_AS(generate(s), Error);
    s = {};
    s.lesion_radius_min = 5;
    s.lesion_radius_max = 2;
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.n_lesions = 400;
    s.max_attempts = 20;
    try {
        generate(s);
        FAIL("expected a placement failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Generation);
    }
}

TEST_CASE("simulated gaze is deterministic and has the burst structure") {
    SynthSpec s;
    SynthImage img = generate(s);
    GazeSimSpec g;
    g.seed = 9;
    GazeTrace a = simulate_gaze(img.gt, img.image, g, "x");
    GazeTrace b = simulate_gaze(img.gt, img.image, g, "x");
    CHECK(a == b);
    CHECK(a.samples.size() == 5u * 3u * 10u);
    for (std::size_t i = 1; i < a.samples.size(); ++i) CHECK(a.samples[i].t_ms >= a.samples[i - 1].t_ms);
    // Consecutive bursts are separated by a saccade gap.
    CHECK(a.samples[10].t_ms - a.samples[9].t_ms == doctest::Approx(150.0));
    CHECK(a.samples[1].t_ms - a.samples[0].t_ms == doctest::Approx(1000.0 / 60.0));
    g.seed = 10;
    CHECK_FALSE(simulate_gaze(img.gt, img.image, g) == a);
}

TEST_CASE("zero jitter places every sample on a lesion centroid") {
    SynthSpec s;
    s.seed = 4;
    SynthImage img = generate(s);
    GazeSimSpec g;
    g.jitter_sigma_px = 0.0;
    GazeTrace t = simulate_gaze(img.gt, img.image, g);
    std::vector<Point2d> centroids;
    for (const auto& comp : connected_components(img.gt)) {
        Point2d c;
        for (auto p : comp.pixels) c.x += p.x, c.y += p.y;
        centroids.push_back({c.x / static_cast<double>(comp.pixels.size()), c.y / static_cast<double>(comp.pixels.size())});
    }
    for (const auto& smp : t.samples) {
        bool on = false;
        for (auto c : centroids) on = on || (smp.x == c.x && smp.y == c.y);
        CHECK(on);
    }
}

TEST_CASE("jittered gaze on a lesion stays inside the roi that encloses it") {
    // Samples are attributed to the nearest lesion; the enclosing ROI is the one that contains
    // the lesion center and most of its samples.
    std::size_t inside = 0, total = 0;
    double worst = 1.0;
    const PipelineConfig config;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SynthSpec s;
        s.seed = 500 + seed;
        const SynthImage img = generate(s);
        GazeSimSpec g;
        g.seed = seed;
        const GazeTrace trace = simulate_gaze(img.gt, img.image, g);
        const GazeMap map = build_gaze_map(trace, img.image.size(), config.sigma_px);
        const auto rois = extract_rois(binarize_gaze(map, config.gaze_binarize_quantile), map, img.image, config);
        std::vector<std::vector<Point2d>> per_lesion(img.lesions.size());
        for (const auto& smp : trace.samples) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < img.lesions.size(); ++k)
                if (std::hypot(smp.x - img.lesions[k].center.x, smp.y - img.lesions[k].center.y) <
                    std::hypot(smp.x - img.lesions[best].center.x, smp.y - img.lesions[best].center.y))
                    best = k;
            per_lesion[best].push_back({smp.x, smp.y});
        }
        for (std::size_t k = 0; k < img.lesions.size(); ++k) {
            const auto c = img.lesions[k].center;
            std::size_t best_in = 0;
            for (const auto& roi : rois) {
                const BBox b = roi.box();
                if (!b.contains(static_cast<int>(c.x), static_cast<int>(c.y))) continue;
                std::size_t in = 0;
                for (const auto& p : per_lesion[k])
                    in += p.x >= b.x && p.y >= b.y && p.x < b.x + b.width && p.y < b.y + b.height;
                best_in = std::max(best_in, in);
            }
            inside += best_in;
            total += per_lesion[k].size();
            worst = std::min(worst, static_cast<double>(best_in) / static_cast<double>(per_lesion[k].size()));
        }
    }
    const double fraction = static_cast<double>(inside) / static_cast<double>(total);
    MESSAGE("gaze inside enclosing roi: " << fraction << " (worst lesion " << worst << ")");
    CHECK(fraction >= 0.95);
}

TEST_CASE("distractor bursts land on dark fundus pixels outside the ground truth") {
    SynthSpec s;
    s.seed = 6;
    SynthImage img = generate(s);
    GazeSimSpec g;
    g.jitter_sigma_px = 0.0;
    g.distractor_rate = 0.5;
    GazeTrace t = simulate_gaze(img.gt, img.image, g);
    // 15 lesion bursts plus round(0.5 * 15) = 8 distractor bursts.
    CHECK(t.samples.size() == (15u + 8u) * 10u);
    std::size_t off_gt = 0;
    for (const auto& smp : t.samples)
        if (!img.gt.at(static_cast<int>(smp.x), static_cast<int>(smp.y)) && smp.x == std::floor(smp.x)) ++off_gt;
    CHECK(off_gt == 80);
    CHECK_THROWS_AS(simulate_gaze(BinaryMask::from_pixels(img.image.size(), {}), img.image, GazeSimSpec{}), Error);
}

TEST_CASE("synthetic dataset round trips through disk") {
    const fs::path dir = fs::temp_directory_path() / "glanceseg_ds_test";
    fs::remove_all(dir);
    SynthSpec s;
    s.dims = {128, 128};
    s.n_lesions = 2;
    s.vessel_count = 2;
    s.n_exudates = 0;
    Dataset ds = make_synthetic_dataset(3, 40, s);
    REQUIRE(ds.items.size() == 3);
    CHECK(ds.items[0].id == "synth_000");
    CHECK(ds.items[2].id == "synth_002");
    for (const auto& it : ds.items) save_dataset_item(dir, it);
    fs::remove(dir / "gaze" / "synth_001.csv");
    Dataset back = load_dataset(dir);
    REQUIRE(back.items.size() == 2);
    CHECK(back.skipped == std::vector<std::string>{"synth_001"});
    CHECK(back.items[0].image == ds.items[0].image);
    CHECK(back.items[0].gt == ds.items[0].gt);
    CHECK(back.items[1].gaze.samples == ds.items[2].gaze.samples);
    // Item i uses synth seed base + i.
    s.seed = 42;
    CHECK(generate(s).image == ds.items[2].image);
    fs::remove_all(dir);
}
