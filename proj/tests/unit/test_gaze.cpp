#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "glanceseg/gaze.hpp"
#include "glanceseg/raster.hpp"

using namespace glanceseg;

namespace {

GazeTrace trace_of(std::vector<Point2d> pts) {
    GazeTrace t;
    double ms = 0;
    for (auto p : pts) t.samples.push_back({ms += 16, p.x, p.y, true});
    return t;
}

std::string parse_error(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_gaze_csv(in, "trace.csv", "x");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Parse);
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("single sample peaks at 1/(sqrt(2 pi) sigma)") {
    for (double sigma : {5.0, 25.0}) {
        GazeMap m = build_gaze_map(trace_of({{100, 80}}), {200, 160}, sigma);
        CHECK(std::abs(m.map.at(100, 80) - gaze_peak_amplitude(sigma)) <= 1e-12);
        CHECK(m.map.max() == m.map.at(100, 80));
    }
    CHECK(std::abs(gaze_peak_amplitude(25.0) - 1.0 / (std::sqrt(2 * std::numbers::pi) * 25.0)) <= 1e-15);
}

TEST_CASE("kernel support stops at three sigma") {
    GazeMap m = build_gaze_map(trace_of({{50, 50}}), {101, 101}, 5.0);
    CHECK(m.map.at(65, 50) > 0.0);
    CHECK(m.map.at(66, 50) == 0.0);
    CHECK(m.map.at(50, 34) == 0.0);
}

TEST_CASE("gaze map is additive over samples") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ux(0, 120), uy(0, 90);
    std::vector<Point2d> a, b;
    for (int i = 0; i < 15; ++i) a.push_back({ux(rng), uy(rng)});
    for (int i = 0; i < 9; ++i) b.push_back({ux(rng), uy(rng)});
    std::vector<Point2d> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const Size dims{120, 90};
    GazeMap ma = build_gaze_map(trace_of(a), dims, 7.0);
    GazeMap mb = build_gaze_map(trace_of(b), dims, 7.0);
    GazeMap mab = build_gaze_map(trace_of(ab), dims, 7.0);
    for (int y = 0; y < dims.height; ++y)
        for (int x = 0; x < dims.width; ++x) CHECK(std::abs(mab.map.at(x, y) - ma.map.at(x, y) - mb.map.at(x, y)) <= 1e-12);
    CHECK(mab.total_weight == doctest::Approx(ma.total_weight + mb.total_weight).epsilon(1e-12));
}

TEST_CASE("gaze map is translation equivariant away from the border") {
    std::vector<Point2d> pts = {{40.3, 35.7}, {44.1, 38.0}, {37.5, 41.2}};
    std::vector<Point2d> moved;
    const int dx = 23, dy = -11;
    for (auto p : pts) moved.push_back({p.x + dx, p.y + dy});
    GazeMap a = build_gaze_map(trace_of(pts), {160, 120}, 6.0);
    GazeMap b = build_gaze_map(trace_of(moved), {160, 120}, 6.0);
    for (int y = 0; y < 120; ++y)
        for (int x = 0; x < 160; ++x) {
            const int sx = x + dx, sy = y + dy;
            if (sx < 0 || sy < 0 || sx >= 160 || sy >= 120) continue;
            CHECK(std::abs(b.map.at(sx, sy) - a.map.at(x, y)) <= 1e-12);
        }
}

TEST_CASE("invalid and out-of-frame samples are skipped") {
    GazeTrace t = trace_of({{5, 5}, {-1, 3}, {10, 200}});
    t.samples.push_back({100, 7, 7, false});
    GazeMap m = build_gaze_map(t, {20, 20}, 2.0);
    CHECK(m.deposited() == 1);
    CHECK(m.skipped == 2);
    CHECK_THROWS_AS(build_gaze_map(trace_of({{-5, -5}}), {20, 20}, 2.0), Error);
    CHECK_THROWS_AS(build_gaze_map(trace_of({{5, 5}}), {20, 20}, 0.0), Error);
}

TEST_CASE("accumulator snapshots equal the batch map") {
    GazeTrace t = trace_of({{10, 10}, {12, 9}, {30, 22}, {31, 25}});
    GazeAccumulator acc({48, 32}, 4.0);
    acc.add(std::span(t.samples).subspan(0, 2));
    GazeMap early = acc.snapshot();
    acc.add(std::span(t.samples).subspan(2));
    CHECK(early.deposited() == 2);
    GazeMap batch = build_gaze_map(t, {48, 32}, 4.0);
    CHECK(acc.current().map == batch.map);
    CHECK(acc.current().total_weight == batch.total_weight);
}

TEST_CASE("weighted geometric median matches grid search") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0, 200), w(0.1, 3.0);
    for (int set = 0; set < 20; ++set) {
        std::vector<Point2d> pts;
        std::vector<double> ws;
        const int n = 3 + set % 10;
        for (int i = 0; i < n; ++i) pts.push_back({u(rng), u(rng)}), ws.push_back(w(rng));
        const Point2d got = weighted_geometric_median(pts, ws);
        const Point2d want = oracle::geomedian_grid(pts, ws);
        CHECK(std::hypot(got.x - want.x, got.y - want.y) <= 0.25);
    }
}

TEST_CASE("geometric median stops at a dominant data point") {
    std::vector<Point2d> pts = {{0, 0}, {10, 0}, {0, 10}};
    std::vector<double> ws = {10.0, 1.0, 1.0};
    const Point2d c = weighted_geometric_median(pts, ws);
    CHECK(std::hypot(c.x, c.y) < 1e-6);
}

TEST_CASE("ads grows with dispersion and centers on the cluster") {
    GazeMap tight = build_gaze_map(trace_of({{100, 100}, {101, 100}, {100, 101}, {99, 99}}), {256, 256}, 25.0);
    GazeMap loose = build_gaze_map(trace_of({{40, 40}, {200, 60}, {60, 210}, {190, 190}}), {256, 256}, 25.0);
    const AdsResult a = ads(tight), b = ads(loose);
    CHECK(a.score < b.score);
    CHECK(std::hypot(a.center.x - 100, a.center.y - 100) < 1.5);
    CHECK(a.score >= 0.0);
}

TEST_CASE("ads center agrees with grid search on map-weighted samples") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(20, 230);
    for (int set = 0; set < 20; ++set) {
        std::vector<Point2d> pts;
        for (int i = 0; i < 4 + set % 7; ++i) pts.push_back({u(rng), u(rng)});
        GazeMap m = build_gaze_map(trace_of(pts), {256, 256}, 25.0);
        std::vector<double> ws;
        for (auto p : m.points) ws.push_back(m.map.at(static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))));
        const Point2d want = oracle::geomedian_grid(m.points, ws);
        const AdsResult r = ads(m);
        CHECK(std::hypot(r.center.x - want.x, r.center.y - want.y) <= 0.25);
    }
}

TEST_CASE("gaze binarization keeps the top quantile of nonzero values") {
    GazeMap m = build_gaze_map(trace_of({{30, 30}}), {64, 64}, 4.0);
    GrayMap b = binarize_gaze(m, 0.85);
    const double th = nonzero_quantile(m.map, 0.85);
    CHECK(th > 0.0);
    for (std::size_t i = 0; i < b.values().size(); ++i) CHECK((b.values()[i] == 1.0) == (m.map.values()[i] >= th));
    CHECK(b.at(30, 30) == 1.0);
    GazeMap zero;
    zero.map = GrayMap(4, 4);
    CHECK_THROWS_AS(binarize_gaze(zero, 0.85), Error);
}

TEST_CASE("gaze csv round trip") {
    GazeTrace t = trace_of({{1.5, 2.25}, {3, 4}});
    t.samples[1].valid = false;
    t.image_id = "img";
    std::stringstream io;
    write_gaze_csv(io, t);
    CHECK(parse_gaze_csv(io, "mem", "img") == t);
}

TEST_CASE("gaze csv errors name the source and line") {
    CHECK(parse_error("").find("missing header") != std::string::npos);
    CHECK(parse_error("x,y\n1,2\n").find("trace.csv:1") != std::string::npos);
    CHECK(parse_error("t_ms,x,y,valid\n0,1,2,1\n5,1,2\n").find("trace.csv:3") != std::string::npos);
    CHECK(parse_error("t_ms,x,y,valid\n0,1,abc,1\n").find("abc") != std::string::npos);
    CHECK(parse_error("t_ms,x,y,valid\n0,1,2,yes\n").find("validity") != std::string::npos);
    CHECK(parse_error("t_ms,x,y,valid\n10,1,2,1\n5,1,2,1\n").find("non-decreasing") != std::string::npos);
    std::istringstream ok("# comment\n t_ms, x, y, valid \n\n0, 1.5, 2, true\n");
    CHECK(parse_gaze_csv(ok, "s", "i").samples.size() == 1);
}
