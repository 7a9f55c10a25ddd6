#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "glanceseg/raster.hpp"
#include "glanceseg/saliency.hpp"

using namespace glanceseg;

namespace {

double dynamic_range(const GrayMap& g) { return g.max() - g.min(); }

}  // namespace

TEST_CASE("ft of a constant image is zero") {
    Frame flat = oracle::uniform_frame(32, 24, 180, 60, 30);
    SaliencyMap s = ft_saliency(flat);
    CHECK(s.degenerate);
    CHECK(s.map.max() == 0.0);
    GrayMap raw = ft_response(to_lab(flat));
    CHECK(raw.max() == 0.0);
}

TEST_CASE("ft response is invariant to a constant Lab shift") {
    std::mt19937_64 rng(4);
    LabImage lab = to_lab(oracle::random_frame(rng, 24, 20));
    LabImage shifted = lab;
    for (double& v : shifted.L.values()) v += 7.5;
    for (double& v : shifted.a.values()) v -= 12.25;
    for (double& v : shifted.b.values()) v += 3.0;
    GrayMap a = ft_response(lab), b = ft_response(shifted);
    for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(std::abs(a.values()[i] - b.values()[i]) <= 1e-6);
}

TEST_CASE("ft response equals direct convolution") {
    std::mt19937_64 rng(8);
    LabImage lab = to_lab(oracle::random_frame(rng, 15, 11));
    for (double cutoff : {kDefaultFtCutoff, 0.5}) {
        GrayMap a = ft_response(lab, cutoff);
        GrayMap b = oracle::ft_direct(lab, ft_kernel(cutoff));
        for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-10));
    }
}

TEST_CASE("default ft kernel is the 5-tap binomial") {
    auto k = ft_kernel(kDefaultFtCutoff);
    REQUIRE(k.size() == 5);
    CHECK(k[0] == 1.0 / 16);
    CHECK(k[2] == 6.0 / 16);
    CHECK(ft_kernel(kDefaultFtCutoff / 2).size() > 5);
    CHECK_THROWS_AS(ft_kernel(0.0), Error);
}

TEST_CASE("ft peaks on a dot on a uniform background") {
    for (auto [dx, dy] : {std::pair{20, 15}, std::pair{9, 30}, std::pair{40, 40}}) {
        Frame f = oracle::uniform_frame(48, 48, 200, 100, 50);
        for (int y = dy - 1; y <= dy + 1; ++y)
            for (int x = dx - 1; x <= dx + 1; ++x) f.set(x, y, 90, 20, 20);
        SaliencyMap s = ft_saliency(f);
        int bx = 0, by = 0;
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x)
                if (s.map.at(x, y) > s.map.at(bx, by)) bx = x, by = y;
        CHECK(std::hypot(bx - dx, by - dy) <= 2.0);
        CHECK(s.map.max() == doctest::Approx(1.0));
    }
}

TEST_CASE("raster-scan mbd never underestimates the exact barrier") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 25; ++trial) {
        GrayMap img = oracle::random_gray(rng, 12, 10);
        GrayMap exact = oracle::mbd_exact(img);
        GrayMap fast = mbd_distance(img, 10);
        double mae = 0.0;
        for (std::size_t i = 0; i < img.values().size(); ++i) {
            CHECK(fast.values()[i] >= exact.values()[i] - 1e-12);
            mae += std::abs(fast.values()[i] - exact.values()[i]);
        }
        mae /= static_cast<double>(img.values().size());
        CHECK(mae <= 0.05 * dynamic_range(img));
    }
}

TEST_CASE("mbd is exact on a monotone ramp and zero on the border") {
    GrayMap ramp(9, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) ramp.at(x, y) = std::min({x, y, 8 - x, 8 - y});
    GrayMap d = mbd_distance(ramp, 10);
    GrayMap e = oracle::mbd_exact(ramp);
    CHECK(d == e);
    for (int i = 0; i < 9; ++i) {
        CHECK(d.at(i, 0) == 0.0);
        CHECK(d.at(0, i) == 0.0);
        CHECK(d.at(8, i) == 0.0);
    }
    CHECK(d.at(4, 4) == 4.0);
}

TEST_CASE("mbd combines four scan orientations") {
    std::mt19937_64 rng(21);
    GrayMap img = oracle::random_gray(rng, 10, 8);
    GrayMap one = mbd_raster_scan(img, 10);
    GrayMap all = mbd_distance(img, 10);
    for (std::size_t i = 0; i < one.values().size(); ++i) CHECK(all.values()[i] <= one.values()[i]);
}

TEST_CASE("fusion is a renormalized weighted sum") {
    std::mt19937_64 rng(6);
    SaliencyMap a{oracle::random_gray(rng, 8, 8), SaliencyMethod::FT, false};
    SaliencyMap b{oracle::random_gray(rng, 8, 8), SaliencyMethod::MBD, false};
    SaliencyMap f = fuse(a, b, 0.5, 0.5);
    CHECK(f.map.min() == 0.0);
    CHECK(f.map.max() == doctest::Approx(1.0));
    GrayMap raw(8, 8);
    for (std::size_t i = 0; i < raw.values().size(); ++i) raw.values()[i] = 0.5 * a.map.values()[i] + 0.5 * b.map.values()[i];
    normalize_min_max(raw);
    for (std::size_t i = 0; i < raw.values().size(); ++i) CHECK(f.map.values()[i] == doctest::Approx(raw.values()[i]).epsilon(1e-12));
    SaliencyMap bad{GrayMap(4, 4), SaliencyMethod::MBD, false};
    CHECK_THROWS_AS(fuse(a, bad, 0.5, 0.5), Error);
}

TEST_CASE("saliency binarization returns row-major salient points") {
    SaliencyMap s{GrayMap(10, 10), SaliencyMethod::Combined, false};
    for (int i = 0; i < 100; ++i) s.map.values()[static_cast<std::size_t>(i)] = (i + 1) / 100.0;
    SalientPoints p = binarize_saliency(s, 0.9);
    CHECK(p.points.size() == 10);
    CHECK(p.points.front() == PixelPoint{0, 9});
    CHECK(std::is_sorted(p.points.begin(), p.points.end()));
    SalientPoints none = binarize_saliency({GrayMap(5, 5), SaliencyMethod::Combined, true}, 0.9);
    CHECK(none.points.empty());
}

TEST_CASE("saliency maps lie in the unit interval") {
    std::mt19937_64 rng(30);
    Frame f = oracle::random_frame(rng, 20, 20);
    for (const SaliencyMap& s : {ft_saliency(f), mbd_saliency(f, 10)}) {
        CHECK(s.map.min() >= 0.0);
        CHECK(s.map.max() <= 1.0);
    }
    CHECK_THROWS_AS(mbd_saliency(f, 0), Error);
}
