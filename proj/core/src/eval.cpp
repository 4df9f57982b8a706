#include "sbmc/eval.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace sbmc {

const std::array<std::string_view, kClassCount>& class_names() {
    static const std::array<std::string_view, kClassCount> names = {
        "cabinet", "bed",     "chair",        "sofa",          "table",  "door",
        "window",  "bookshelf", "picture",    "counter",       "desk",   "curtain",
        "refrigerator", "showercurtain", "toilet", "sink",     "bathtub", "garbagebin"};
    return names;
}

int class_id_of(std::string_view name) {
    const auto& names = class_names();
    for (int i = 0; i < kClassCount; ++i) {
        if (names[i] == name) {
            return i;
        }
    }
    return -1;
}

double iou_aabb(const AABox& a, const AABox& b) {
    a.validate();
    b.validate();
    const auto overlap = [](double ca, double sa, double cb, double sb) {
        const double lo = std::max(ca - 0.5 * sa, cb - 0.5 * sb);
        const double hi = std::min(ca + 0.5 * sa, cb + 0.5 * sb);
        return std::max(0.0, hi - lo);
    };
    const double inter = overlap(a.center.x, a.sx, b.center.x, b.sx)
                         * overlap(a.center.y, a.sy, b.center.y, b.sy)
                         * overlap(a.center.z, a.sz, b.center.z, b.sz);
    if (inter == 0.0) {
        return 0.0;
    }
    return inter / (a.volume() + b.volume() - inter);
}

MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<AABox>& gts,
                             double iou_thresh) {
    int cls = -1;
    for (const Detection& d : dets) {
        if (cls == -1) {
            cls = d.box.class_id;
        } else if (d.box.class_id != cls) {
            throw std::invalid_argument("match_detections: mixed detection classes");
        }
    }
    for (const AABox& g : gts) {
        if (cls == -1) {
            cls = g.class_id;
        } else if (g.class_id != cls) {
            throw std::invalid_argument("match_detections: ground-truth class mismatch");
        }
    }

    MatchResult res;
    res.order.resize(dets.size());
    std::iota(res.order.begin(), res.order.end(), 0);
    std::sort(res.order.begin(), res.order.end(), [&](int a, int b) {
        if (dets[a].score != dets[b].score) {
            return dets[a].score > dets[b].score;
        }
        return a < b;
    });

    res.tp.assign(dets.size(), 0);
    std::vector<std::uint8_t> used(gts.size(), 0);
    for (std::size_t rank = 0; rank < res.order.size(); ++rank) {
        const Detection& d = dets[res.order[rank]];
        double best_iou = 0.0;
        int best_gt = -1;
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (used[j]) {
                continue;
            }
            const double iou = iou_aabb(d.box, gts[j]);
            if (iou > best_iou) {  // strict: IoU tie keeps the lower gt index
                best_iou = iou;
                best_gt = static_cast<int>(j);
            }
        }
        if (best_gt >= 0 && best_iou >= iou_thresh) {
            res.tp[rank] = 1;
            used[best_gt] = 1;
        }
    }
    return res;
}

double average_precision(const std::vector<std::uint8_t>& flags, int num_gt) {
    if (num_gt < 0) {
        throw std::invalid_argument("average_precision: negative ground-truth count");
    }
    if (num_gt == 0 || flags.empty()) {
        return 0.0;
    }
    const int n = static_cast<int>(flags.size());
    std::vector<double> precision(n);
    int cum_tp = 0;
    for (int i = 0; i < n; ++i) {
        cum_tp += (flags[i] != 0);
        precision[i] = static_cast<double>(cum_tp) / (i + 1);
    }
    for (int i = n - 2; i >= 0; --i) {
        precision[i] = std::max(precision[i], precision[i + 1]);
    }
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (flags[i] != 0) {
            sum += precision[i];
        }
    }
    return sum / num_gt;
}

double recompute_map(const EvalReport& report) {
    double ap_sum = 0.0;
    int with_gt = 0;
    for (int c = 0; c < kClassCount; ++c) {
        if (report.num_gt[c] > 0) {
            ap_sum += report.per_class_ap[c];
            ++with_gt;
        }
    }
    return with_gt > 0 ? ap_sum / with_gt : 0.0;
}

EvalReport map_at(const std::vector<Detection>& dets, const std::vector<AABox>& gts,
                  double iou_thresh) {
    EvalReport report;
    for (int c = 0; c < kClassCount; ++c) {
        std::vector<Detection> class_dets;
        for (const Detection& d : dets) {
            if (d.box.class_id == c) {
                class_dets.push_back(d);
            }
        }
        std::vector<AABox> class_gts;
        for (const AABox& g : gts) {
            if (g.class_id == c) {
                class_gts.push_back(g);
            }
        }
        report.num_det[c] = static_cast<int>(class_dets.size());
        report.num_gt[c] = static_cast<int>(class_gts.size());

        const MatchResult match = match_detections(class_dets, class_gts, iou_thresh);
        report.per_class_ap[c] = average_precision(match.tp, report.num_gt[c]);
        if (report.num_gt[c] > 0) {
            ++report.classes_with_gt;
        }
    }
    report.map_value = recompute_map(report);
    return report;
}

void write_report(std::ostream& os, const EvalReport& report) {
    os << "class\tap\tnum_gt\tnum_det\n";
    int total_gt = 0;
    int total_det = 0;
    for (int c = 0; c < kClassCount; ++c) {
        os << class_names()[c] << '\t' << format_double(report.per_class_ap[c]) << '\t'
           << report.num_gt[c] << '\t' << report.num_det[c] << '\n';
        total_gt += report.num_gt[c];
        total_det += report.num_det[c];
    }
    os << "mAP\t" << format_double(report.map_value) << '\t' << total_gt << '\t' << total_det
       << '\n';
}

}  // namespace sbmc
