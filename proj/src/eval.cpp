#include "glanceseg/eval.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>

#include <json.hpp>

#include "glanceseg/pipeline.hpp"
#include "glanceseg/raster.hpp"

namespace glanceseg {
namespace {

std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double ratio(std::size_t num, std::size_t den, double empty) {
    return den ? static_cast<double>(num) / static_cast<double>(den) : empty;
}

void add_timing(StageTiming& acc, const StageTiming& t) {
    acc.gaze_ms += t.gaze_ms;
    acc.roi_ms += t.roi_ms;
    acc.saliency_ms += t.saliency_ms;
    acc.prompts_ms += t.prompts_ms;
    acc.segment_ms += t.segment_ms;
    acc.dkf_ms += t.dkf_ms;
    acc.total_ms += t.total_ms;
}

}  // namespace

GrayMap confidence_map(std::span<const CandidateMask> masks, Size dims) {
    GrayMap out(dims.width, dims.height);
    for (const auto& m : masks) {
        if (m.mask.dims() != dims) throw Error(ErrorCode::DimensionMismatch, "mask raster differs from evaluation raster");
        for (const auto& p : m.mask.pixels()) out.at(p.x, p.y) = std::max(out.at(p.x, p.y), m.confidence);
    }
    return out;
}

double aupr_from_points(std::span<const PrPoint> points) {
    double area = 0.0, envelope = 0.0;
    // Walk from the highest recall down so the running maximum is the envelope.
    for (std::size_t i = points.size(); i-- > 0;) {
        envelope = std::max(envelope, points[i].precision);
        const double prev = i ? points[i - 1].recall : 0.0;
        area += (points[i].recall - prev) * envelope;
    }
    return area;
}

void PrAccumulator::add(const GrayMap& confidence, const BinaryMask& gt) {
    if (confidence.size() != gt.dims()) throw Error(ErrorCode::DimensionMismatch, "confidence map and ground truth differ");
    positives_ += gt.area();
    for (int y = 0; y < confidence.height(); ++y)
        for (int x = 0; x < confidence.width(); ++x) {
            const double c = confidence.at(x, y);
            if (!(c > 0.0)) continue;
            auto& slot = counts_[c];
            (gt.at(x, y) ? slot.first : slot.second)++;
        }
}

PrCurve PrAccumulator::curve() const {
    if (positives_ == 0) throw Error(ErrorCode::UndefinedRecall, "ground truth has no positive pixel");
    PrCurve out;
    std::size_t tp = 0, fp = 0;
    for (const auto& [threshold, c] : counts_) {
        tp += c.first;
        fp += c.second;
        out.points.push_back({ratio(tp, tp + fp, 1.0), ratio(tp, positives_, 0.0), threshold});
    }
    out.aupr = aupr_from_points(out.points);
    return out;
}

PrCurve pr_curve(std::span<const CandidateMask> masks, const BinaryMask& gt) {
    PrAccumulator acc;
    acc.add(confidence_map(masks, gt.dims()), gt);
    return acc.curve();
}

double dice(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.dims() != gt.dims()) throw Error(ErrorCode::DimensionMismatch, "dice on masks of different rasters");
    const std::size_t denom = pred.area() + gt.area();
    if (denom == 0) return 1.0;
    return 2.0 * static_cast<double>(intersection_area(pred, gt)) / static_cast<double>(denom);
}

LesionCounts lesion_match(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts, double iou_min) {
    struct Pair {
        double iou;
        std::size_t g, p;
    };
    std::vector<Pair> pairs;
    for (std::size_t g = 0; g < gts.size(); ++g)
        for (std::size_t p = 0; p < preds.size(); ++p) {
            if (intersect(gts[g].bbox(), preds[p].bbox()).empty()) continue;
            const double v = iou(gts[g], preds[p]);
            if (v >= iou_min && v > 0.0) pairs.push_back({v, g, p});
        }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
    LesionCounts out;
    out.gt_lesions = gts.size();
    out.predictions = preds.size();
    std::vector<bool> g_used(gts.size()), p_used(preds.size());
    for (const auto& pr : pairs) {
        if (g_used[pr.g] || p_used[pr.p]) continue;
        g_used[pr.g] = p_used[pr.p] = true;
        out.pairs.emplace_back(pr.g, pr.p);
    }
    out.matched = out.pairs.size();
    return out;
}

std::vector<BinaryMask> split_components(const BinaryMask& gt) {
    std::vector<BinaryMask> out;
    for (const auto& c : connected_components(gt)) out.push_back(BinaryMask::from_pixels(gt.dims(), c.pixels));
    return out;
}

ImageEval Evaluator::add(const std::string& id, std::span<const CandidateMask> predictions, const BinaryMask& gt,
                         std::size_t prompt_count, const StageTiming& timing) {
    pr_.add(confidence_map(predictions, gt.dims()), gt);
    const BinaryMask pred = union_mask(predictions, gt.dims());
    const std::size_t tp = intersection_area(pred, gt);
    tp_ += tp;
    pred_pixels_ += pred.area();
    gt_pixels_ += gt.area();

    std::vector<BinaryMask> pred_masks;
    for (const auto& m : predictions) pred_masks.push_back(m.mask);
    const auto gts = split_components(gt);
    const LesionCounts lc = lesion_match(pred_masks, gts);
    lesions_.matched += lc.matched;
    lesions_.gt_lesions += lc.gt_lesions;
    lesions_.predictions += lc.predictions;
    prompts_ += prompt_count;
    add_timing(timing_, timing);

    ImageEval e;
    e.id = id;
    e.pixel_precision = ratio(tp, pred.area(), 1.0);
    e.pixel_recall = ratio(tp, gt.area(), 1.0);
    e.dice = dice(pred, gt);
    e.lesion_recall = lc.recall();
    e.lesion_precision = lc.precision();
    e.predictions = predictions.size();
    e.prompt_count = prompt_count;
    images_.push_back(e);
    return e;
}

EvalReport Evaluator::report() const {
    EvalReport r;
    r.label = label_;
    r.images = images_.size();
    if (pr_.positives() > 0) {
        const PrCurve c = pr_.curve();
        r.aupr = c.aupr;
        r.pr_curve = c.points;
    }
    const std::size_t denom = pred_pixels_ + gt_pixels_;
    r.dice = denom ? 2.0 * static_cast<double>(tp_) / static_cast<double>(denom) : 1.0;
    r.pixel_precision = ratio(tp_, pred_pixels_, 1.0);
    r.pixel_recall = ratio(tp_, gt_pixels_, 1.0);
    r.lesion_recall = lesions_.recall();
    r.lesion_precision = lesions_.precision();
    r.matched = lesions_.matched;
    r.gt_lesions = lesions_.gt_lesions;
    r.predictions = lesions_.predictions;
    r.prompt_count = prompts_;
    r.per_image = images_;
    r.timing = timing_;
    return r;
}

std::string to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["label"] = r.label;
    j["images"] = r.images;
    j["aupr"] = r.aupr;
    j["dice"] = r.dice;
    j["pixel_precision"] = r.pixel_precision;
    j["pixel_recall"] = r.pixel_recall;
    j["lesion_recall"] = r.lesion_recall;
    j["lesion_precision"] = r.lesion_precision;
    j["matched"] = r.matched;
    j["gt_lesions"] = r.gt_lesions;
    j["predictions"] = r.predictions;
    j["prompt_count"] = r.prompt_count;
    auto& curve = j["pr_curve"] = nlohmann::ordered_json::array();
    for (const auto& p : r.pr_curve) curve.push_back({{"precision", p.precision}, {"recall", p.recall}, {"threshold", p.threshold}});
    auto& imgs = j["per_image"] = nlohmann::ordered_json::array();
    for (const auto& e : r.per_image)
        imgs.push_back({{"id", e.id},
                        {"pixel_precision", e.pixel_precision},
                        {"pixel_recall", e.pixel_recall},
                        {"dice", e.dice},
                        {"lesion_recall", e.lesion_recall},
                        {"lesion_precision", e.lesion_precision},
                        {"predictions", e.predictions},
                        {"prompt_count", e.prompt_count}});
    return j.dump(2) + "\n";
}

std::string timing_json(const EvalReport& r) {
    const nlohmann::ordered_json j = {{"label", r.label},
                                      {"images", r.images},
                                      {"gaze_ms", r.timing.gaze_ms},
                                      {"roi_ms", r.timing.roi_ms},
                                      {"saliency_ms", r.timing.saliency_ms},
                                      {"prompts_ms", r.timing.prompts_ms},
                                      {"segment_ms", r.timing.segment_ms},
                                      {"dkf_ms", r.timing.dkf_ms},
                                      {"total_ms", r.timing.total_ms}};
    return j.dump(2) + "\n";
}

void write_pr_table(std::ostream& out, std::span<const PrPoint> points) {
    out << "recall\tprecision\n";
    for (const auto& p : points) out << shortest(p.recall) << '\t' << shortest(p.precision) << '\n';
}

}  // namespace glanceseg
