#pragma once

#include "sbmc/io.hpp"
#include "sbmc/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace sbmc {

inline constexpr int kClassCount = 18;

/// ScanNet benchmark classes, fixed order; class_id indexes this list.
const std::array<std::string_view, kClassCount>& class_names();

/// Index of `name` in class_names(), or -1.
int class_id_of(std::string_view name);

using Detection = DetectionRecord;

/// Greedy score-ordered matching within one class.
struct MatchResult {
    std::vector<int> order;        // detection indices, score descending
    std::vector<std::uint8_t> tp;  // flag per rank
};

struct EvalReport {
    std::array<double, kClassCount> per_class_ap{};
    std::array<int, kClassCount> num_gt{};
    std::array<int, kClassCount> num_det{};
    double map_value = 0.0;
    int classes_with_gt = 0;
};

/// Intersection volume over union volume; 0 when disjoint.
double iou_aabb(const AABox& a, const AABox& b);

/// Ranks detections by score (ties by index) and marks each TP iff its
/// best-IoU still-unmatched ground truth reaches `iou_thresh`; IoU ties take
/// the lowest ground-truth index. Every input must share one class id.
MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<AABox>& gts,
                             double iou_thresh);

/// All-point interpolated AP from score-ordered TP/FP flags: the precision
/// envelope is made non-increasing, then averaged over ground-truth recall
/// steps. 0 when num_gt is 0.
double average_precision(const std::vector<std::uint8_t>& flags, int num_gt);

/// Per-class AP at one IoU threshold; mAP is the unweighted mean over classes
/// with at least one ground-truth box.
EvalReport map_at(const std::vector<Detection>& dets, const std::vector<AABox>& gts,
                  double iou_thresh);

/// Re-derives the mAP from the per-class columns of a report; map_at uses
/// this same aggregation.
double recompute_map(const EvalReport& report);

/// Tab-separated table: one row per class plus a trailing mAP row.
void write_report(std::ostream& os, const EvalReport& report);

}  // namespace sbmc
