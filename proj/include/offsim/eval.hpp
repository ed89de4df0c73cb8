#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "offsim/box.hpp"
#include "offsim/common.hpp"

namespace offsim {

/// One detection's outcome after matching: its confidence plus whether it
/// claimed a ground truth (true positive) or not (false positive).
struct ScoredFlag {
    double confidence = 0.0;
    bool true_positive = false;
};

/// Matching outcome for a single class, typically for one frame.
struct MatchResult {
    int class_id = 0;
    std::vector<ScoredFlag> flags;  // one entry per detection of the class
    int ground_truth_count = 0;
    int false_negatives = 0;        // ground truths that no detection claimed

    int true_positives() const {
        int n = 0;
        for (const auto& f : flags) n += f.true_positive ? 1 : 0;
        return n;
    }
};

/// Greedy confidence-ordered matching of one frame's detections against its
/// ground truths. Matching is class-restricted; each ground truth can be
/// claimed at most once. Detections are visited in descending confidence
/// (ties keep input order) and claim the unmatched same-class ground truth
/// with the highest IoU >= threshold (IoU ties go to the lowest index).
inline std::map<int, MatchResult> match_frame(const std::vector<Detection>& detections,
                                              const std::vector<GroundTruthBox>& ground_truths,
                                              double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
        throw input_error("iou threshold must lie in (0,1), got " + std::to_string(iou_threshold));
    }
    for (const auto& d : detections) {
        require_valid(d.box, "match_frame detection");
        if (d.confidence < 0.0 || d.confidence > 1.0) {
            throw input_error("detection confidence out of [0,1]: " + std::to_string(d.confidence));
        }
    }
    for (const auto& g : ground_truths) require_valid(g.box, "match_frame ground truth");

    std::map<int, MatchResult> per_class;
    for (const auto& g : ground_truths) {
        auto& r = per_class[g.box.class_id];
        r.class_id = g.box.class_id;
        r.ground_truth_count++;
    }

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].confidence > detections[b].confidence;
    });

    std::vector<bool> gt_taken(ground_truths.size(), false);
    for (std::size_t idx : order) {
        const Detection& det = detections[idx];
        auto& r = per_class[det.box.class_id];
        r.class_id = det.box.class_id;

        double best_iou = -1.0;
        std::size_t best_gt = ground_truths.size();
        for (std::size_t g = 0; g < ground_truths.size(); ++g) {
            if (gt_taken[g]) continue;
            if (ground_truths[g].box.class_id != det.box.class_id) continue;
            const double v = iou(det.box, ground_truths[g].box);
            if (v >= iou_threshold && v > best_iou) {
                best_iou = v;
                best_gt = g;
            }
        }

        ScoredFlag flag;
        flag.confidence = det.confidence;
        if (best_gt < ground_truths.size()) {
            gt_taken[best_gt] = true;
            flag.true_positive = true;
        }
        per_class[det.box.class_id].flags.push_back(flag);
    }

    for (auto& [cls, r] : per_class) {
        r.false_negatives = r.ground_truth_count - r.true_positives();
    }
    return per_class;
}

/// Precision-recall curve of one class over a whole test set.
/// Points are ordered by descending confidence, so recall is nondecreasing.
struct PrCurve {
    std::vector<std::pair<double, double>> points;  // (recall, precision)
    int total_ground_truths = 0;
};

/// Pools the per-frame match results of one class and computes the cumulative
/// precision/recall prefix curve. A class without any ground truth has no
/// defined curve and is rejected.
inline PrCurve precision_recall_curve(const std::vector<MatchResult>& matches) {
    PrCurve curve;
    std::vector<ScoredFlag> pooled;
    for (const auto& m : matches) {
        curve.total_ground_truths += m.ground_truth_count;
        pooled.insert(pooled.end(), m.flags.begin(), m.flags.end());
    }
    if (curve.total_ground_truths <= 0) {
        throw input_error("precision_recall_curve: class has zero ground truths, AP undefined");
    }
    std::stable_sort(pooled.begin(), pooled.end(),
                     [](const ScoredFlag& a, const ScoredFlag& b) { return a.confidence > b.confidence; });

    int tp = 0;
    int seen = 0;
    curve.points.reserve(pooled.size());
    for (const auto& f : pooled) {
        ++seen;
        if (f.true_positive) ++tp;
        const double recall = static_cast<double>(tp) / curve.total_ground_truths;
        const double precision = static_cast<double>(tp) / seen;
        curve.points.emplace_back(recall, precision);
    }
    return curve;
}

/// Exact area below the monotone precision envelope of the curve, using
/// all-point interpolation: precision at each recall is replaced by the
/// maximum precision at any recall to its right, then rectangles are summed
/// over the recall increments. An empty curve has area 0.
inline double average_precision(const PrCurve& curve) {
    if (curve.points.empty()) return 0.0;

    const std::size_t n = curve.points.size();
    std::vector<double> envelope(n);
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        running = std::max(running, curve.points[i].second);
        envelope[i] = running;
    }

    double area = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double recall = curve.points[i].first;
        area += (recall - prev_recall) * envelope[i];
        prev_recall = recall;
    }
    return area;
}

/// Unweighted mean of per-class average precisions.
inline double mean_ap(const std::map<int, double>& per_class_ap) {
    if (per_class_ap.empty()) throw input_error("mean_ap: no classes present");
    double sum = 0.0;
    for (const auto& [cls, ap] : per_class_ap) sum += ap;
    return sum / static_cast<double>(per_class_ap.size());
}

/// Full evaluation of a detection set against ground truth, grouped by frame.
/// Classes that never appear in the ground truth are excluded from the mAP
/// (their detections still exist but have no defined AP).
struct EvalSummary {
    std::map<int, double> per_class_ap;
    std::map<int, int> per_class_ground_truths;
    std::map<int, int> per_class_detections;
    std::vector<int> classes_without_ground_truth;  // seen in detections only
    double map_value = 0.0;
};

inline EvalSummary evaluate_detections(const std::map<std::string, std::vector<Detection>>& detections_by_frame,
                                       const std::map<std::string, std::vector<GroundTruthBox>>& ground_truth_by_frame,
                                       double iou_threshold,
                                       double confidence_threshold = 0.0) {
    std::map<int, std::vector<MatchResult>> per_class_matches;

    std::vector<std::string> frames;
    for (const auto& [frame, gts] : ground_truth_by_frame) frames.push_back(frame);
    for (const auto& [frame, dets] : detections_by_frame) {
        if (!ground_truth_by_frame.count(frame)) frames.push_back(frame);
    }
    std::sort(frames.begin(), frames.end());

    static const std::vector<Detection> no_dets;
    static const std::vector<GroundTruthBox> no_gts;
    for (const auto& frame : frames) {
        auto dit = detections_by_frame.find(frame);
        auto git = ground_truth_by_frame.find(frame);
        const auto& all_dets = dit == detections_by_frame.end() ? no_dets : dit->second;
        const auto& gts = git == ground_truth_by_frame.end() ? no_gts : git->second;

        std::vector<Detection> dets;
        dets.reserve(all_dets.size());
        for (const auto& d : all_dets) {
            if (d.confidence >= confidence_threshold) dets.push_back(d);
        }

        for (auto& [cls, match] : match_frame(dets, gts, iou_threshold)) {
            per_class_matches[cls].push_back(std::move(match));
        }
    }

    EvalSummary summary;
    for (const auto& [cls, matches] : per_class_matches) {
        int gt_count = 0;
        int det_count = 0;
        for (const auto& m : matches) {
            gt_count += m.ground_truth_count;
            det_count += static_cast<int>(m.flags.size());
        }
        summary.per_class_ground_truths[cls] = gt_count;
        summary.per_class_detections[cls] = det_count;
        if (gt_count == 0) {
            summary.classes_without_ground_truth.push_back(cls);
            continue;
        }
        summary.per_class_ap[cls] = average_precision(precision_recall_curve(matches));
    }
    if (!summary.per_class_ap.empty()) {
        summary.map_value = mean_ap(summary.per_class_ap);
    }
    return summary;
}

}  // namespace offsim
