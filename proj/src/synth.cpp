#include "glanceseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "glanceseg/raster.hpp"

namespace glanceseg {
namespace {

constexpr int kCurveSegments = 64;
constexpr double kVignette = 0.35;
constexpr std::array<double, 3> kLesionShade{0.6, 1.3, 0.9};
constexpr std::array<double, 3> kVesselScale{0.6, 0.42, 0.55};
constexpr std::array<double, 3> kExudateLift{45.0, 70.0, 10.0};

double dist(Point2d a, Point2d b) { return std::hypot(a.x - b.x, a.y - b.y); }

double segment_distance(Point2d q, Point2d a, Point2d b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((q.x - a.x) * vx + (q.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return dist(q, {a.x + t * vx, a.y + t * vy});
}

std::vector<Point2d> polyline(const SynthVessel& v) {
    std::vector<Point2d> pts;
    for (int i = 0; i <= kCurveSegments; ++i) pts.push_back(v.at(static_cast<double>(i) / kCurveSegments));
    return pts;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

void SynthSpec::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidParameter, "synth: " + what); };
    if (dims.width < 64 || dims.height < 64) fail("image_dims must be at least 64x64");
    if (n_lesions < 0) fail("n_lesions must be non-negative");
    if (!(lesion_radius_min > 0) || lesion_radius_max < lesion_radius_min) fail("lesion_radius range is invalid");
    if (vessel_count < 0) fail("vessel_count must be non-negative");
    if (n_exudates < 0) fail("n_exudates must be non-negative");
    if (!(contrast > 0)) fail("contrast must be positive");
    if (noise_sigma < 0) fail("noise_sigma must be non-negative");
    if (texture_amplitude < 0) fail("texture_amplitude must be non-negative");
    if (max_attempts <= 0) fail("max_attempts must be positive");
    for (double c : background_tint)
        if (c < 0 || c > 255) fail("background_tint components must lie in [0,255]");
}

Point2d SynthVessel::at(double t) const {
    const double u = 1.0 - t;
    return {u * u * p0.x + 2 * u * t * p1.x + t * t * p2.x, u * u * p0.y + 2 * u * t * p1.y + t * t * p2.y};
}

double SynthVessel::distance(Point2d q) const {
    const auto pts = polyline(*this);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < pts.size(); ++i) best = std::min(best, segment_distance(q, pts[i - 1], pts[i]));
    return best;
}

double disk_coverage(const SynthDisk& disk, int x, int y) {
    int inside = 0;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            const double sx = x - 0.5 + (i + 0.5) / 4.0, sy = y - 0.5 + (j + 0.5) / 4.0;
            if ((sx - disk.center.x) * (sx - disk.center.x) + (sy - disk.center.y) * (sy - disk.center.y) <=
                disk.radius * disk.radius)
                ++inside;
        }
    return inside / 16.0;
}

SynthImage generate(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const int W = spec.dims.width, H = spec.dims.height;
    SynthImage out;
    out.fundus = {{W / 2.0, H / 2.0}, 0.47 * std::min(W, H)};
    const Point2d c = out.fundus.center;
    const double R = out.fundus.radius;

    // Vessels leave a disc-like hub left of center and run to the rim.
    const Point2d hub{c.x - 0.35 * R, c.y};
    for (int k = 0; k < spec.vessel_count; ++k) {
        const double theta = 2 * std::numbers::pi * k / spec.vessel_count + uniform(-0.3, 0.3);
        SynthVessel v;
        v.p0 = hub;
        v.p2 = {c.x + R * std::cos(theta), c.y + R * std::sin(theta)};
        const double len = dist(v.p0, v.p2);
        const double bend = uniform(-0.25, 0.25) * len;
        const double nx = -(v.p2.y - v.p0.y) / std::max(len, 1e-9), ny = (v.p2.x - v.p0.x) / std::max(len, 1e-9);
        v.p1 = {(v.p0.x + v.p2.x) / 2 + bend * nx, (v.p0.y + v.p2.y) / 2 + bend * ny};
        v.width = uniform(3.0, 6.0);
        out.vessels.push_back(v);
    }

    auto place = [&](std::vector<SynthDisk>& dst, double r_lo, double r_hi, const char* what, int index) {
        const double r = uniform(r_lo, r_hi);
        for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
            const double rho = (R - r - 14.0) * std::sqrt(unit(rng));
            const double phi = uniform(0.0, 2 * std::numbers::pi);
            const Point2d p{c.x + rho * std::cos(phi), c.y + rho * std::sin(phi)};
            if (p.x < 2 * r || p.y < 2 * r || p.x > W - 1 - 2 * r || p.y > H - 1 - 2 * r) continue;
            bool clear = true;
            for (const auto& v : out.vessels)
                if (v.distance(p) < r + v.width / 2 + 6.0) clear = false;
            for (const auto* group : {&out.lesions, &out.exudates})
                for (const auto& d : *group)
                    if (dist(d.center, p) < d.radius + r + 20.0) clear = false;
            if (clear) {
                dst.push_back({p, r});
                return;
            }
        }
        throw Error(ErrorCode::Generation, std::string("synth: ") + what + " " + std::to_string(index) +
                                               " has no position clear of vessels and other features after " +
                                               std::to_string(spec.max_attempts) + " attempts");
    };
    for (int k = 0; k < spec.n_lesions; ++k) place(out.lesions, spec.lesion_radius_min, spec.lesion_radius_max, "lesion", k);
    for (int k = 0; k < spec.n_exudates; ++k) place(out.exudates, 4.0, 8.0, "exudate", k);

    // Low-frequency texture: smoothed white noise rescaled to unit deviation.
    GrayMap texture(W, H);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : texture.values()) v = gauss(rng);
    texture = convolve_separable(texture, gaussian_kernel(4.0));
    {
        double s2 = 0.0;
        for (double v : texture.values()) s2 += v * v;
        const double sd = std::sqrt(s2 / static_cast<double>(texture.values().size()));
        if (sd > 0)
            for (double& v : texture.values()) v /= sd;
    }

    GrayMap vessel_cov(W, H);
    for (const auto& v : out.vessels) {
        const auto pts = polyline(v);
        const double half = v.width / 2.0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const int x0 = std::max(0, static_cast<int>(std::floor(std::min(pts[i - 1].x, pts[i].x) - half - 1)));
            const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max(pts[i - 1].x, pts[i].x) + half + 1)));
            const int y0 = std::max(0, static_cast<int>(std::floor(std::min(pts[i - 1].y, pts[i].y) - half - 1)));
            const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max(pts[i - 1].y, pts[i].y) + half + 1)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double cov = std::clamp(half - segment_distance({double(x), double(y)}, pts[i - 1], pts[i]) + 0.5, 0.0, 1.0);
                    vessel_cov.at(x, y) = std::max(vessel_cov.at(x, y), cov);
                }
        }
    }

    std::vector<double> rgb(spec.dims.area() * 3);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double d = dist({double(x), double(y)}, c);
            const double inside = std::clamp(R - d + 0.5, 0.0, 1.0);
            const double f = 1.0 - kVignette * std::min(1.0, (d / R) * (d / R));
            const double tex = 1.0 + spec.texture_amplitude * texture.at(x, y);
            const double vc = vessel_cov.at(x, y) * inside;
            for (int ch = 0; ch < 3; ++ch) {
                const double flat = spec.background_tint[ch] * f;
                const double bg = flat * tex;
                const double vessel = flat * kVesselScale[ch];
                rgb[(static_cast<std::size_t>(y) * W + x) * 3 + ch] = inside * ((1 - vc) * bg + vc * vessel);
            }
        }

    std::vector<std::uint8_t> gt(spec.dims.area(), 0);
    auto paint = [&](const SynthDisk& disk, auto color_of, bool mark) {
        const int x0 = std::max(0, static_cast<int>(std::floor(disk.center.x - disk.radius - 1)));
        const int x1 = std::min(W - 1, static_cast<int>(std::ceil(disk.center.x + disk.radius + 1)));
        const int y0 = std::max(0, static_cast<int>(std::floor(disk.center.y - disk.radius - 1)));
        const int y1 = std::min(H - 1, static_cast<int>(std::ceil(disk.center.y + disk.radius + 1)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double cov = disk_coverage(disk, x, y);
                if (cov <= 0) continue;
                // Lesions saturate at half coverage: ground-truth pixels carry the full lesion color and
                // the anti-aliased ramp lies just outside the ground truth.
                const double weight = mark ? std::min(1.0, 2.0 * cov) : cov;
                const double d = dist({double(x), double(y)}, c);
                const double f = 1.0 - kVignette * std::min(1.0, (d / R) * (d / R));
                for (int ch = 0; ch < 3; ++ch) {
                    double& px = rgb[(static_cast<std::size_t>(y) * W + x) * 3 + ch];
                    px = (1 - weight) * px + weight * color_of(spec.background_tint[ch] * f, ch);
                }
                if (mark && cov >= 0.5) gt[static_cast<std::size_t>(y) * W + x] = 1;
            }
    };
    for (const auto& l : out.lesions)
        paint(l, [&](double flat, int ch) { return std::max(0.0, flat - spec.contrast * kLesionShade[ch]); }, true);
    for (const auto& e : out.exudates)
        paint(e, [&](double flat, int ch) { return std::min(255.0, flat + kExudateLift[ch]); }, false);

    std::vector<std::uint8_t> bytes(rgb.size());
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        const double n = spec.noise_sigma > 0 ? spec.noise_sigma * gauss(rng) : 0.0;
        bytes[i] = to_byte(rgb[i] + n);
    }
    out.image = Frame(W, H, std::move(bytes));
    out.gt = BinaryMask(spec.dims, {0, 0, W, H}, std::move(gt));
    return out;
}

}  // namespace glanceseg
