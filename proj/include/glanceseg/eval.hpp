#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "glanceseg/core.hpp"
#include "glanceseg/pipeline.hpp"
#include "glanceseg/segmenter.hpp"

namespace glanceseg {

struct PrPoint {
    double precision = 0.0;
    double recall = 0.0;
    double threshold = 0.0;
    bool operator==(const PrPoint&) const = default;
};

struct PrCurve {
    // One point per distinct positive confidence, thresholds descending (recall non-decreasing).
    std::vector<PrPoint> points;
    double aupr = 0.0;
};

/// Per-pixel maximum confidence over the covering masks, 0 elsewhere.
GrayMap confidence_map(std::span<const CandidateMask> masks, Size dims);

/// Step-wise area under the precision envelope: sum of (R_i - R_{i-1}) * max_{j>=i} P_j.
double aupr_from_points(std::span<const PrPoint> points);

/// Confusion counts pooled over any number of images.
class PrAccumulator {
public:
    /// Throws DimensionMismatch when the maps disagree.
    void add(const GrayMap& confidence, const BinaryMask& gt);
    std::size_t positives() const { return positives_; }
    /// Throws UndefinedRecall when no ground-truth pixel was seen.
    PrCurve curve() const;

private:
    // threshold -> (true positives, false positives) at exactly that confidence
    std::map<double, std::pair<std::size_t, std::size_t>, std::greater<>> counts_;
    std::size_t positives_ = 0;
};

/// Throws UndefinedRecall on an empty ground truth.
PrCurve pr_curve(std::span<const CandidateMask> masks, const BinaryMask& gt);

/// 2|P and G| / (|P| + |G|); 1 when both are empty.
double dice(const BinaryMask& pred, const BinaryMask& gt);

struct LesionCounts {
    std::size_t matched = 0;
    std::size_t gt_lesions = 0;
    std::size_t predictions = 0;
    // Matched pairs (gt index, prediction index).
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    /// 1 when there is no ground-truth lesion.
    double recall() const { return gt_lesions ? static_cast<double>(matched) / static_cast<double>(gt_lesions) : 1.0; }
    /// 1 when there is no prediction.
    double precision() const {
        return predictions ? static_cast<double>(matched) / static_cast<double>(predictions) : 1.0;
    }
};

inline constexpr double kLesionIouMin = 0.2;

/// Greedy one-to-one matching by descending IoU; pairs below `iou_min` never match.
LesionCounts lesion_match(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts,
                          double iou_min = kLesionIouMin);

/// Each 4-connected component of `gt` as its own mask.
std::vector<BinaryMask> split_components(const BinaryMask& gt);

struct ImageEval {
    std::string id;
    double pixel_precision = 1.0;
    double pixel_recall = 0.0;
    double dice = 0.0;
    double lesion_recall = 0.0;
    double lesion_precision = 1.0;
    std::size_t predictions = 0;
    std::size_t prompt_count = 0;
};

struct EvalReport {
    std::string label;
    std::size_t images = 0;
    double aupr = 0.0;
    double dice = 0.0;
    double pixel_precision = 1.0;
    double pixel_recall = 0.0;
    std::vector<PrPoint> pr_curve;
    double lesion_recall = 0.0;
    double lesion_precision = 1.0;
    std::size_t matched = 0;
    std::size_t gt_lesions = 0;
    std::size_t predictions = 0;
    std::size_t prompt_count = 0;
    std::vector<ImageEval> per_image;
    // Wall-clock, kept out of the deterministic serialization.
    StageTiming timing;
};

/// Pools pixel and lesion statistics over images.
class Evaluator {
public:
    explicit Evaluator(std::string label) : label_(std::move(label)) {}
    ImageEval add(const std::string& id, std::span<const CandidateMask> predictions, const BinaryMask& gt,
                  std::size_t prompt_count = 0, const StageTiming& timing = {});
    EvalReport report() const;

private:
    std::string label_;
    PrAccumulator pr_;
    std::size_t tp_ = 0, pred_pixels_ = 0, gt_pixels_ = 0;
    LesionCounts lesions_;
    std::size_t prompts_ = 0;
    StageTiming timing_;
    std::vector<ImageEval> images_;
};

/// Deterministic JSON text of the report (no timing).
std::string to_json(const EvalReport& report);
/// Stage timings in milliseconds as JSON.
std::string timing_json(const EvalReport& report);

/// Two float columns, recall then precision, tab separated, with a header line.
void write_pr_table(std::ostream& out, std::span<const PrPoint> points);

}  // namespace glanceseg
