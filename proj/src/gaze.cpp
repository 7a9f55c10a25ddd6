#include "glanceseg/gaze.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "glanceseg/raster.hpp"

namespace glanceseg {

double gaze_peak_amplitude(double sigma_px) { return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma_px); }

bool inside_frame(const GazeSample& s, Size frame) {
    return std::isfinite(s.x) && std::isfinite(s.y) && s.x >= 0 && s.y >= 0 && s.x < frame.width &&
           s.y < frame.height;
}

GazeAccumulator::GazeAccumulator(Size frame, double sigma_px) {
    if (!(sigma_px > 0)) throw Error(ErrorCode::InvalidParameter, "sigma_px must be positive");
    state_.map = GrayMap(frame.width, frame.height);
    state_.sigma_px = sigma_px;
}

std::size_t GazeAccumulator::add(std::span<const GazeSample> samples) {
    const std::size_t before = state_.deposited();
    for (const auto& s : samples) add(s);
    return state_.deposited() - before;
}

void GazeAccumulator::add(const GazeSample& s) {
    if (!s.valid) return;
    GrayMap& map = state_.map;
    if (!inside_frame(s, map.size())) {
        ++state_.skipped;
        return;
    }
    const double sigma = state_.sigma_px;
    const double reach = 3.0 * sigma;
    const int x0 = std::max(0, static_cast<int>(std::ceil(s.x - reach)));
    const int x1 = std::min(map.width() - 1, static_cast<int>(std::floor(s.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(s.y - reach)));
    const int y1 = std::min(map.height() - 1, static_cast<int>(std::floor(s.y + reach)));

    const double inv = 1.0 / (2.0 * sigma * sigma);
    const double amplitude = gaze_peak_amplitude(sigma);
    row_weights_.resize(static_cast<std::size_t>(x1 - x0 + 1));
    col_weights_.resize(static_cast<std::size_t>(y1 - y0 + 1));
    for (int x = x0; x <= x1; ++x) {
        const double dx = x - s.x;
        row_weights_[static_cast<std::size_t>(x - x0)] = std::exp(-dx * dx * inv);
    }
    for (int y = y0; y <= y1; ++y) {
        const double dy = y - s.y;
        col_weights_[static_cast<std::size_t>(y - y0)] = amplitude * std::exp(-dy * dy * inv);
    }
    double deposited = 0.0;
    for (int y = y0; y <= y1; ++y) {
        const double cy = col_weights_[static_cast<std::size_t>(y - y0)];
        for (int x = x0; x <= x1; ++x) {
            const double v = cy * row_weights_[static_cast<std::size_t>(x - x0)];
            map.at(x, y) += v;
            deposited += v;
        }
    }
    state_.total_weight += deposited;
    state_.points.push_back({s.x, s.y});
}

GazeMap build_gaze_map(const GazeTrace& trace, Size frame, double sigma_px) {
    GazeAccumulator acc(frame, sigma_px);
    acc.add(trace.samples);
    if (acc.current().deposited() == 0)
        throw Error(ErrorCode::EmptyTrace, "gaze trace '" + trace.image_id + "' has no valid sample inside the frame");
    return acc.snapshot();
}

Point2d weighted_geometric_median(std::span<const Point2d> points, std::span<const double> weights, double tolerance,
                                  int max_iterations) {
    if (points.empty() || points.size() != weights.size())
        throw Error(ErrorCode::InvalidParameter, "geometric median needs matching non-empty points and weights");
    double wsum = 0.0;
    Point2d x{};
    for (std::size_t i = 0; i < points.size(); ++i) {
        wsum += weights[i];
        x.x += weights[i] * points[i].x;
        x.y += weights[i] * points[i].y;
    }
    if (!(wsum > 0)) throw Error(ErrorCode::EmptyMap, "geometric median weights sum to zero");
    x.x /= wsum;
    x.y /= wsum;

    constexpr double coincident = 1e-12;
    for (int it = 0; it < max_iterations; ++it) {
        double nx = 0.0, ny = 0.0, den = 0.0, rx = 0.0, ry = 0.0, eta = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double ddx = points[i].x - x.x, ddy = points[i].y - x.y;
            const double d = std::hypot(ddx, ddy);
            if (d < coincident) {
                eta += weights[i];
                continue;
            }
            const double q = weights[i] / d;
            nx += q * points[i].x;
            ny += q * points[i].y;
            den += q;
            rx += q * ddx;
            ry += q * ddy;
        }
        if (den == 0.0) break;  // every point coincides with x
        Point2d next{nx / den, ny / den};
        if (eta > 0.0) {
            const double r = std::hypot(rx, ry);
            if (r <= eta) break;  // x sits on a data point that is itself optimal
            const double keep = eta / r;
            next = {(1.0 - keep) * next.x + keep * x.x, (1.0 - keep) * next.y + keep * x.y};
        }
        const double step = std::hypot(next.x - x.x, next.y - x.y);
        x = next;
        if (step < tolerance) break;
    }
    return x;
}

AdsResult ads(const GazeMap& gm) {
    if (gm.points.empty() || !(gm.total_weight > 0))
        throw Error(ErrorCode::EmptyMap, "attention dispersion needs a gaze map with deposited samples");
    const GrayMap& map = gm.map;
    std::vector<double> weights;
    weights.reserve(gm.points.size());
    for (const auto& p : gm.points) {
        const int px = std::clamp(static_cast<int>(std::lround(p.x)), 0, map.width() - 1);
        const int py = std::clamp(static_cast<int>(std::lround(p.y)), 0, map.height() - 1);
        weights.push_back(map.at(px, py));
    }
    const Point2d center = weighted_geometric_median(gm.points, weights);
    double wsum = 0.0, cost = 0.0;
    for (std::size_t i = 0; i < gm.points.size(); ++i) {
        wsum += weights[i];
        cost += weights[i] * std::hypot(gm.points[i].x - center.x, gm.points[i].y - center.y);
    }
    const double z = wsum * std::sqrt(static_cast<double>(map.width()) * static_cast<double>(map.height())) / 100.0;
    return {cost / z, center};
}

GrayMap binarize_gaze(const GazeMap& map, double quantile) {
    if (map.map.empty() || map.map.max() <= 0.0) throw Error(ErrorCode::EmptyMap, "cannot binarize an all-zero gaze map");
    return threshold_at_least(map.map, nonzero_quantile(map.map, quantile));
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace

GazeTrace parse_gaze_csv(std::istream& in, const std::string& source, std::string image_id) {
    GazeTrace trace;
    trace.image_id = std::move(image_id);
    std::string raw;
    int line = 0;
    bool header_seen = false;
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ": " + what);
    };
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty() || text.front() == '#') continue;
        if (!header_seen) {
            std::string compact;
            for (char c : text)
                if (c != ' ') compact += c;
            if (compact != "t_ms,x,y,valid") fail("expected header 't_ms,x,y,valid'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = text.find(',', start);
            fields.push_back(trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 4) fail("expected 4 fields, got " + std::to_string(fields.size()));
        GazeSample s;
        double* targets[3] = {&s.t_ms, &s.x, &s.y};
        for (int k = 0; k < 3; ++k) {
            const auto& f = fields[static_cast<std::size_t>(k)];
            auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), *targets[k]);
            if (ec != std::errc{} || end != f.data() + f.size()) fail("bad number '" + f + "'");
        }
        const auto& v = fields[3];
        if (v == "1" || v == "true")
            s.valid = true;
        else if (v == "0" || v == "false")
            s.valid = false;
        else
            fail("bad validity flag '" + v + "'");
        if (!trace.samples.empty() && s.t_ms < trace.samples.back().t_ms) fail("timestamps must be non-decreasing");
        trace.samples.push_back(s);
    }
    if (!header_seen) throw Error(ErrorCode::Parse, source + ": missing header 't_ms,x,y,valid'");
    return trace;
}

GazeTrace read_gaze_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open gaze file " + path.string());
    return parse_gaze_csv(in, path.string(), path.stem().string());
}

void write_gaze_csv(std::ostream& out, const GazeTrace& trace) {
    out << "# gaze trace for " << trace.image_id << "\n";
    out << "t_ms,x,y,valid\n";
    for (const auto& s : trace.samples)
        out << fmt(s.t_ms) << ',' << fmt(s.x) << ',' << fmt(s.y) << ',' << (s.valid ? 1 : 0) << '\n';
}

void write_gaze_csv(const std::filesystem::path& path, const GazeTrace& trace) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write gaze file " + path.string());
    write_gaze_csv(out, trace);
}

}  // namespace glanceseg
