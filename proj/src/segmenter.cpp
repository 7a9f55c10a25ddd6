#include "glanceseg/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "glanceseg/color.hpp"
#include "glanceseg/external_backend.hpp"

namespace glanceseg {
namespace {

/// Luminance and 3x3 means computed once per ROI, plus scratch space reused across seeds.
/// Rasters carry a one-pixel NaN border so the flood fill needs no bounds checks.
class GrowContext {
public:
    explicit GrowContext(const Frame& roi) : w_(roi.width()), h_(roi.height()), wp_(roi.width() + 2) {
        const std::size_t n = static_cast<std::size_t>(wp_) * static_cast<std::size_t>(h_ + 2);
        lum_.assign(n, std::numeric_limits<double>::quiet_NaN());
        mean_.assign(n, 0.0);
        stamp_.assign(n, 0);
        member_.assign(n, 0);
        for (int y = 0; y < h_; ++y)
            for (int x = 0; x < w_; ++x) lum_[idx(x, y)] = luminance(roi.at(x, y, 0), roi.at(x, y, 1), roi.at(x, y, 2));
        for (int y = 0; y < h_; ++y)
            for (int x = 0; x < w_; ++x) {
                double s = 0.0;
                int c = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w_ || ny >= h_) continue;
                        s += lum_[idx(nx, ny)];
                        ++c;
                    }
                mean_[idx(x, y)] = s / c;
            }
    }

    /// Padded indices of the grown region in visiting order, or nothing when it exceeds `cap` or the
    /// seed itself is outside the tolerance.
    /// Members stay marked until the next call (see `is_member`).
    std::optional<std::vector<std::uint32_t>> grow(PixelPoint seed, double tolerance, std::size_t cap) {
        if (++generation_ == 0) {
            std::fill(stamp_.begin(), stamp_.end(), 0);
            std::fill(member_.begin(), member_.end(), 0);
            generation_ = 1;
        }
        const std::uint32_t s = idx(seed.x, seed.y);
        const double ref = mean_[s];
        const double limit = tolerance + 1e-12;
        // The seed obeys the same rule as every other member.
        if (!(std::abs(lum_[s] - ref) <= limit)) return std::nullopt;
        const std::uint32_t offsets[4] = {1, static_cast<std::uint32_t>(-1), static_cast<std::uint32_t>(wp_),
                                          static_cast<std::uint32_t>(-wp_)};
        std::vector<std::uint32_t> region;
        region.reserve(std::min<std::size_t>(cap + 1, 256));
        region.push_back(s);
        stamp_[s] = member_[s] = generation_;
        for (std::size_t head = 0; head < region.size(); ++head) {
            const std::uint32_t i = region[head];
            for (std::uint32_t off : offsets) {
                const std::uint32_t ni = i + off;
                if (stamp_[ni] == generation_) continue;
                stamp_[ni] = generation_;
                // NaN border pixels never pass this test.
                if (std::abs(lum_[ni] - ref) <= limit) {
                    member_[ni] = generation_;
                    region.push_back(ni);
                    if (region.size() > cap) return std::nullopt;
                }
            }
        }
        return region;
    }

    /// True when padded index `i` belongs to the region returned by the latest grow().
    bool is_member(std::uint32_t i) const { return member_[i] == generation_; }

    double luminance_std(const std::vector<std::uint32_t>& region) const {
        // Shifted by the first value so a constant region gives exactly zero.
        const double k = lum_[region.front()];
        double mean = 0.0;
        for (auto i : region) mean += lum_[i] - k;
        mean /= static_cast<double>(region.size());
        double var = 0.0;
        for (auto i : region) var += (lum_[i] - k - mean) * (lum_[i] - k - mean);
        return std::sqrt(var / static_cast<double>(region.size()));
    }

    CandidateMask to_mask(const std::vector<std::uint32_t>& region, double confidence, PixelPoint seed) const {
        std::vector<PixelPoint> pts;
        pts.reserve(region.size());
        for (auto i : region) pts.push_back({static_cast<int>(i % static_cast<std::uint32_t>(wp_)) - 1,
                                             static_cast<int>(i / static_cast<std::uint32_t>(wp_)) - 1});
        return {BinaryMask::from_pixels({w_, h_}, pts), confidence, seed};
    }

private:
    std::uint32_t idx(int x, int y) const { return static_cast<std::uint32_t>((y + 1) * wp_ + (x + 1)); }

    int w_, h_, wp_;
    std::vector<double> lum_;
    std::vector<double> mean_;
    std::vector<std::uint32_t> stamp_;
    std::vector<std::uint32_t> member_;
    std::uint32_t generation_ = 0;
};

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double confidence_from_std(double sd, double tolerance) {
    if (tolerance <= 0) return sd == 0.0 ? 1.0 : 0.0;
    return std::clamp(1.0 - sd / tolerance, 0.0, 1.0);
}

std::size_t area_cap(const Frame& roi) {
    return static_cast<std::size_t>(std::floor(kBaselineAreaCap * static_cast<double>(roi.size().area())));
}

void check_seed(const Frame& roi, PixelPoint seed) {
    if (seed.x < 0 || seed.y < 0 || seed.x >= roi.width() || seed.y >= roi.height())
        throw Error(ErrorCode::InvalidParameter, "prompt outside ROI bounds");
}

}  // namespace

std::vector<CandidateMask> dedup_masks(std::vector<CandidateMask> masks, double iou_threshold) {
    std::vector<std::size_t> order(masks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return masks[a].confidence > masks[b].confidence; });
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        bool duplicate = false;
        for (std::size_t k : kept) {
            if (intersect(masks[i].bbox(), masks[k].bbox()).empty()) continue;
            if (iou(masks[i].mask, masks[k].mask) > iou_threshold) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end());
    std::vector<CandidateMask> out;
    out.reserve(kept.size());
    for (std::size_t k : kept) out.push_back(std::move(masks[k]));
    return out;
}

std::vector<CandidateMask> segment(SegmenterBackend& backend, const Frame& roi, const PromptSet& prompts) {
    if (prompts.points.empty()) return {};
    for (const auto& p : prompts.points) check_seed(roi, p);
    auto masks = backend.segment(roi, prompts.points);
    std::erase_if(masks, [](const CandidateMask& m) { return m.mask.empty(); });
    return dedup_masks(std::move(masks), kMaskDedupIou);
}

std::optional<CandidateMask> baseline_region_grow(const Frame& roi, PixelPoint seed, double tolerance) {
    check_seed(roi, seed);
    GrowContext ctx(roi);
    auto region = ctx.grow(seed, tolerance, area_cap(roi));
    if (!region) return std::nullopt;
    std::sort(region->begin(), region->end());
    return ctx.to_mask(*region, confidence_from_std(ctx.luminance_std(*region), tolerance), seed);
}

BackendInfo BaselineBackend::info() const { return {"baseline-region-grow", "1.0", 0}; }

std::vector<CandidateMask> BaselineBackend::segment(const Frame& roi, std::span<const PixelPoint> prompts) {
    std::vector<CandidateMask> out;
    if (prompts.empty()) return out;
    GrowContext ctx(roi);
    const std::size_t cap = area_cap(roi);
    // Seeds inside one flat region usually grow the identical pixel set; keep the first. Candidates
    // are keyed by size and an order-independent hash, then compared exactly.
    std::unordered_multimap<std::uint64_t, std::vector<std::uint32_t>> seen;
    for (const auto& seed : prompts) {
        check_seed(roi, seed);
        auto region = ctx.grow(seed, tolerance_, cap);
        if (!region) continue;
        std::uint64_t h = region->size();
        for (auto i : *region) h += splitmix(i);
        bool duplicate = false;
        auto [lo, hi] = seen.equal_range(h);
        for (auto it = lo; it != hi && !duplicate; ++it)
            duplicate = it->second.size() == region->size() &&
                        std::all_of(it->second.begin(), it->second.end(), [&](std::uint32_t i) { return ctx.is_member(i); });
        if (duplicate) continue;
        std::sort(region->begin(), region->end());
        out.push_back(ctx.to_mask(*region, confidence_from_std(ctx.luminance_std(*region), tolerance_), seed));
        seen.emplace(h, std::move(*region));
    }
    return out;
}

std::unique_ptr<SegmenterBackend> make_backend(const std::string& spec, double timeout_s) {
    if (spec == "baseline") return std::make_unique<BaselineBackend>();
    constexpr std::string_view prefix = "external:";
    if (spec.starts_with(prefix)) return make_external_backend(spec.substr(prefix.size()), timeout_s);
    throw Error(ErrorCode::InvalidParameter, "unknown segmenter backend '" + spec + "'");
}

}  // namespace glanceseg
