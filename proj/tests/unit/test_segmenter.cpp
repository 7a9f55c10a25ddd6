#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "glanceseg/segmenter.hpp"

using namespace glanceseg;

namespace {

// Gray background with a dark disk of radius 4 centered at (20, 20).
Frame spot_frame() {
    Frame f = oracle::uniform_frame(48, 48, 180, 180, 180);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            if ((x - 20) * (x - 20) + (y - 20) * (y - 20) <= 16) f.set(x, y, 60, 60, 60);
    return f;
}

CandidateMask cand(BinaryMask m, double conf) { return {std::move(m), conf, {0, 0}}; }

}  // namespace

TEST_CASE("region grow recovers a uniform spot") {
    Frame f = spot_frame();
    auto m = baseline_region_grow(f, {20, 20});
    REQUIRE(m);
    CHECK(m->mask == oracle::disk_mask({48, 48}, 20, 20, 4));
    CHECK(m->confidence == 1.0);
    CHECK(m->source_prompt == PixelPoint{20, 20});
}

TEST_CASE("region grow drops regions above the area cap") {
    Frame f = spot_frame();
    // The background covers most of the ROI.
    CHECK_FALSE(baseline_region_grow(f, {2, 2}));
}

TEST_CASE("region grow respects the tolerance") {
    // Two 3x6 blocks 26 gray levels apart on a bright background.
    Frame g = oracle::uniform_frame(40, 40, 200, 200, 200);
    for (int y = 20; y < 26; ++y)
        for (int x = 10; x < 16; ++x) {
            const std::uint8_t v = x < 13 ? 100 : 126;
            g.set(x, y, v, v, v);
        }
    auto left = baseline_region_grow(g, {11, 22});
    REQUIRE(left);
    CHECK(left->mask == oracle::rect_mask({40, 40}, 10, 20, 3, 6));
    auto both = baseline_region_grow(g, {11, 22}, 40.0 / 255.0);
    REQUIRE(both);
    CHECK(both->mask == oracle::rect_mask({40, 40}, 10, 20, 6, 6));
    CHECK(both->confidence < 1.0);
    CHECK(both->confidence >= 0.0);
    // Zero tolerance keeps only pixels equal to the seed mean.
    auto exact = baseline_region_grow(g, {11, 22}, 0.0);
    REQUIRE(exact);
    CHECK(exact->confidence == 1.0);
}

TEST_CASE("seed outside the roi is rejected") {
    Frame f = spot_frame();
    CHECK_THROWS_AS(baseline_region_grow(f, {48, 0}), Error);
    BaselineBackend b;
    PromptSet p{{{-1, 3}}, 10, {48, 48}};
    CHECK_THROWS_AS(segment(b, f, p), Error);
}

TEST_CASE("baseline backend matches per-seed region growing") {
    std::mt19937_64 rng(17);
    Frame f = spot_frame();
    for (int y = 30; y < 36; ++y)
        for (int x = 30; x < 34; ++x) f.set(x, y, 90, 40, 40);
    std::vector<PixelPoint> seeds = {{20, 20}, {21, 20}, {31, 31}, {2, 2}, {19, 22}, {33, 35}};
    BaselineBackend b;
    auto got = b.segment(f, seeds);
    std::vector<CandidateMask> want;
    for (auto s : seeds)
        if (auto m = baseline_region_grow(f, s)) {
            bool seen = false;
            for (const auto& w : want) seen = seen || w.mask == m->mask;
            if (!seen) want.push_back(*m);
        }
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].mask == want[i].mask);
        CHECK(got[i].confidence == want[i].confidence);
        CHECK(got[i].source_prompt == want[i].source_prompt);
    }
    CHECK(got.size() < seeds.size());
}

TEST_CASE("segment deduplicates at iou 0.9 keeping the most confident mask") {
    const Size d{30, 30};
    // IoU of the first two is 0.95; exactly 0.9 would not count as a duplicate.
    std::vector<CandidateMask> ms = {cand(oracle::rect_mask(d, 0, 0, 20, 20), 0.4),
                                     cand(oracle::rect_mask(d, 0, 0, 20, 19), 0.8),
                                     cand(oracle::rect_mask(d, 22, 22, 3, 3), 0.1)};
    std::vector<CandidateMask> edge = {cand(oracle::rect_mask(d, 0, 0, 10, 10), 0.4),
                                       cand(oracle::rect_mask(d, 0, 0, 10, 9), 0.8)};
    CHECK(dedup_masks(edge, kMaskDedupIou).size() == 2);
    auto out = dedup_masks(ms, kMaskDedupIou);
    REQUIRE(out.size() == 2);
    CHECK(out[0].confidence == 0.8);
    CHECK(out[1].confidence == 0.1);
    // Equal confidence keeps the earlier mask.
    std::vector<CandidateMask> tie = {cand(oracle::rect_mask(d, 0, 0, 10, 10), 0.5),
                                      cand(oracle::rect_mask(d, 0, 0, 10, 10), 0.5)};
    tie[1].source_prompt = {3, 3};
    auto t = dedup_masks(tie, kMaskDedupIou);
    REQUIRE(t.size() == 1);
    CHECK(t[0].source_prompt == PixelPoint{0, 0});
}

TEST_CASE("dedup output never overlaps above the threshold") {
    std::mt19937_64 rng(23);
    std::vector<CandidateMask> ms;
    for (int i = 0; i < 60; ++i) {
        const int x = static_cast<int>(rng() % 20), y = static_cast<int>(rng() % 20);
        ms.push_back(cand(oracle::rect_mask({30, 30}, x, y, 4 + static_cast<int>(rng() % 4), 5), (rng() % 100) / 100.0));
    }
    for (double th : {0.5, 0.9}) {
        auto out = dedup_masks(ms, th);
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = i + 1; j < out.size(); ++j) CHECK(iou(out[i].mask, out[j].mask) <= th);
    }
}

TEST_CASE("empty prompt set yields no masks") {
    BaselineBackend b;
    CHECK(segment(b, spot_frame(), PromptSet{}).empty());
}

TEST_CASE("backend factory") {
    CHECK(make_backend("baseline")->info().name == "baseline-region-grow");
    CHECK_THROWS_AS(make_backend("sam"), Error);
    CHECK_THROWS_AS(make_backend("external:ftp://x"), Error);
}
