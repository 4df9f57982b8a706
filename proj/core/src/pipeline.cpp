#include "sbmc/pipeline.hpp"

#include "sbmc/attention.hpp"
#include "sbmc/grouping.hpp"
#include "sbmc/io.hpp"
#include "sbmc/ray_engine.hpp"
#include "sbmc/sampling.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace sbmc {
namespace {

using Clock = std::chrono::steady_clock;
using Shape = std::vector<long long>;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string shape_trace(const std::vector<StageRecord>& stages) {
    std::string trace;
    for (const StageRecord& s : stages) {
        trace += s.name + "[";
        for (std::size_t i = 0; i < s.shape.size(); ++i) {
            trace += (i ? "x" : "") + std::to_string(s.shape[i]);
        }
        trace += "] ";
    }
    return trace.empty() ? std::string("none") : trace;
}

/// Nearest ground-truth assignment for one cluster center.
struct Assignment {
    int box = -1;
    bool positive = false;
};

Assignment assign_cluster(const Point3& center, const std::vector<AABox>& boxes,
                          double positive_radius) {
    Assignment a;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < boxes.size(); ++j) {
        const double d2 = squared_distance(center, boxes[j].center);
        if (d2 < best) {
            best = d2;
            a.box = static_cast<int>(j);
        }
    }
    a.positive = a.box >= 0 && best <= positive_radius * positive_radius;
    return a;
}

}  // namespace

PipelineResult run_pipeline(const SyntheticScene& scene, const PipelineConfig& cfg,
                            const WeightBundle& w) {
    cfg.validate();
    w.validate_against(cfg);
    scene.cloud.validate();
    if (scene.cloud.size() != cfg.n_input_points) {
        throw std::invalid_argument("scene point count does not match n_input_points");
    }
    if (scene.cloud.channels() != cfg.n_input_channels) {
        throw std::invalid_argument("scene channel count does not match n_input_channels");
    }

    PipelineResult result;
    PipelineDiagnostics& diag = result.diagnostics;
    const auto t_begin = Clock::now();

    const auto stage = [&](const char* name, auto&& body) {
        const auto t0 = Clock::now();
        Shape shape;
        try {
            shape = body();
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("stage '") + name + "' failed: " + e.what()
                                     + " | completed: " + shape_trace(diag.stages));
        }
        diag.stages.push_back({name, std::move(shape), ms_between(t0, Clock::now())});
    };

    const int n = cfg.n_input_points;
    const int m = cfg.n_seeds;
    const int k = cfg.n_clusters;
    const int c = cfg.seed_feature_width;

    PointCloud sorted;
    stage("canonical_sort", [&] {
        sorted = canonical_sort(scene.cloud);
        return Shape{n, sorted.channels()};
    });

    ForegroundScores scores;
    std::vector<int> sample_idx;
    stage("sampling", [&] {
        scores = oracle_foreground_scores(sorted, scene.boxes);
        sample_idx = cfg.use_fbs ? fbs(sorted, scores, m, cfg.effective_kappa(),
                                       cfg.effective_m_fore())
                                 : fps(sorted, m);
        if (static_cast<int>(sample_idx.size()) != m) {
            throw std::logic_error("sampling produced the wrong seed count");
        }
        return Shape{m};
    });

    SeedSet seeds;
    FeatureMatrix patches;  // backbone seed features, kept for gsc and upsampling
    stage("set_abstraction", [&] {
        seeds = set_abstraction(sorted, sample_idx, cfg.seed_group_radius, cfg.group_size_seed,
                                w.sa_seed);
        patches = seeds.features;
        return Shape{seeds.size(), seeds.features.cols()};
    });

    stage("ppc", [&] {
        if (cfg.use_ppc) {
            seeds = ppc(seeds, w.ppc_w, cfg.cgnl_groups);
        }
        return Shape{seeds.size(), seeds.features.cols()};
    });

    VoteSet votes;
    FeatureMatrix vote_offsets;
    stage("vote", [&] {
        const FeatureMatrix out = mlp_forward(w.vote, seeds.features);
        vote_offsets = out.leftCols(3);
        votes = apply_votes(seeds, vote_offsets, out.rightCols(c));
        return Shape{votes.size(), 3 + c};
    });

    ClusterSet clusters;
    stage("cluster", [&] {
        clusters = cluster_votes(votes, k, cfg.cluster_radius);
        return Shape{clusters.size(), clusters.features.cols()};
    });

    PointCloud surface_cloud;
    stage("upsample", [&] {
        std::vector<Point3> targets;
        if (cfg.upsampled_seeds == sorted.size()) {
            targets = sorted.positions;
        } else {
            PointCloud bare;
            bare.positions = sorted.positions;
            bare.features.resize(sorted.size(), 0);
            for (int idx : fps(bare, cfg.upsampled_seeds)) {
                targets.push_back(sorted.positions[idx]);
            }
        }
        SeedSet backbone;
        backbone.positions = seeds.positions;
        backbone.features = patches;
        surface_cloud.positions = targets;
        surface_cloud.features = propagate_features(backbone, targets, cfg.knn_upsample);
        return Shape{surface_cloud.size(), surface_cloud.channels()};
    });

    const RayFan fan = generate_rays(cfg.p_polar, cfg.ray_multiplier);
    diag.n_rays = fan.size();

    std::vector<double> scales(k, 0.0);
    std::vector<Assignment> assignments(k);
    FeatureMatrix enhanced(k, c);
    std::vector<double> coarse_probs;
    std::vector<std::uint8_t> coarse_labels;
    std::vector<double> fine_probs;
    std::vector<std::uint8_t> fine_labels;

    std::vector<std::vector<Point3>> box_surfaces(scene.boxes.size());
    for (std::size_t j = 0; j < scene.boxes.size(); ++j) {
        box_surfaces[j] = box_surface_points(sorted, scene.boxes[j], cfg.surface_shell);
    }

    stage("ray_grouping", [&] {
        for (int i = 0; i < k; ++i) {
            const Point3& center = clusters.centers[i];
            const Eigen::RowVectorXd f = clusters.features.row(i);
            const double length = predict_scale(f, w.scale_head);
            scales[i] = length;
            assignments[i] = assign_cluster(center, scene.boxes, cfg.positive_radius);
            const double radius = cfg.effective_anchor_radius(length);

            const auto level = [&](const std::vector<Point3>& anchors, const MlpWeights& sa,
                                   const MlpWeights& mask_mlp, const MlpWeights& proj,
                                   const MlpWeights& mlp2, int slots, std::vector<double>& probs_acc,
                                   std::vector<std::uint8_t>& labels_acc) {
                const FeatureMatrix feats =
                    anchor_features(surface_cloud, anchors, radius, sa, cfg.group_size_anchor);
                const std::vector<double> probs = surface_mask_predict(feats, f, mask_mlp);
                std::vector<std::uint8_t> hard(probs.size());
                for (std::size_t j = 0; j < probs.size(); ++j) {
                    hard[j] = probs[j] >= 0.5 ? 1 : 0;
                }
                if (assignments[i].positive) {
                    const AABox& box = scene.boxes[assignments[i].box];
                    const auto oracle = surface_mask_oracle(
                        anchors, box, box_surfaces[assignments[i].box], cfg.surface_proximity);
                    probs_acc.insert(probs_acc.end(), probs.begin(), probs.end());
                    labels_acc.insert(labels_acc.end(), oracle.begin(), oracle.end());
                }
                const FeatureMatrix masked = apply_mask(feats, hard);
                FeatureMatrix ray_feats(fan.size(), 32);
                for (int r = 0; r < fan.size(); ++r) {
                    ray_feats.row(r) =
                        fuse_point_features(masked.middleRows(r * slots, slots), proj);
                }
                return fuse_ray_features(ray_feats, mlp2);
            };

            const Eigen::RowVectorXd mu_c =
                level(coarse_anchors(center, fan, length, cfg.kc), w.anchor_sa_coarse,
                      w.mask_coarse, w.point_proj_coarse, w.ray_mlp_coarse, cfg.kc, coarse_probs,
                      coarse_labels);
            const Eigen::RowVectorXd mu_f =
                level(fine_anchors(center, fan, length, cfg.kf), w.anchor_sa_fine, w.mask_fine,
                      w.point_proj_fine, w.ray_mlp_fine, cfg.kf, fine_probs, fine_labels);
            const Eigen::RowVectorXd g = fuse_levels(mu_c, mu_f, w.fuse);
            enhanced.row(i) = combine_features(f, g, w.combine);
        }
        return Shape{k, c};
    });

    FeatureMatrix after_ooc;
    stage("ooc", [&] {
        after_ooc = cfg.use_ooc ? cgnl(enhanced, w.ooc_w, cfg.cgnl_groups) : enhanced;
        return Shape{after_ooc.rows(), after_ooc.cols()};
    });

    FeatureMatrix context;
    stage("gsc", [&] {
        context = cfg.use_gsc ? gsc(patches, enhanced, w.gsc_agg, after_ooc) : after_ooc;
        return Shape{context.rows(), context.cols()};
    });

    Eigen::VectorXd objectness;
    FeatureMatrix box_out;
    FeatureMatrix class_probs;
    stage("head", [&] {
        const FeatureMatrix hidden = mlp_forward(w.head_shared, context);
        objectness = mlp_forward(w.head_obj, hidden).col(0);
        box_out = mlp_forward(w.head_box, hidden);
        class_probs = softmax_rows(mlp_forward(w.head_cls, hidden));
        return Shape{k, hidden.cols()};
    });

    FeatureMatrix pred_centers(k, 3);
    FeatureMatrix pred_sizes(k, 3);
    stage("detections", [&] {
        result.detections.reserve(k);
        for (int i = 0; i < k; ++i) {
            Detection det;
            det.box.center = clusters.centers[i]
                             + Point3{box_out(i, 0), box_out(i, 1), box_out(i, 2)};
            det.box.sx = softplus(box_out(i, 3));
            det.box.sy = softplus(box_out(i, 4));
            det.box.sz = softplus(box_out(i, 5));
            int best_class = 0;
            for (int j = 1; j < class_probs.cols(); ++j) {
                if (class_probs(i, j) > class_probs(i, best_class)) {
                    best_class = j;
                }
            }
            det.box.class_id = best_class;
            det.score = objectness(i) * class_probs(i, best_class);
            pred_centers.row(i) << det.box.center.x, det.box.center.y, det.box.center.z;
            pred_sizes.row(i) << det.box.sx, det.box.sy, det.box.sz;
            result.detections.push_back(det);
        }
        return Shape{k};
    });

    stage("losses", [&] {
        std::vector<std::uint8_t> on_object(m, 0);
        FeatureMatrix gt_offsets = FeatureMatrix::Zero(m, 3);
        for (int i = 0; i < m; ++i) {
            const Point3& pos = seeds.positions[i];
            double best = std::numeric_limits<double>::infinity();
            for (const AABox& box : scene.boxes) {
                if (!box.contains(pos)) {
                    continue;
                }
                const double d2 = squared_distance(pos, box.center);
                if (d2 < best) {
                    best = d2;
                    on_object[i] = 1;
                    gt_offsets.row(i) << box.center.x - pos.x, box.center.y - pos.y,
                        box.center.z - pos.z;
                }
            }
        }
        const LossTerm vote_term =
            vote_reg_loss(vote_offsets, gt_offsets, on_object, cfg.vote_norm);

        std::vector<std::uint8_t> score_labels(scores.scores.size());
        for (std::size_t i = 0; i < scores.scores.size(); ++i) {
            score_labels[i] = scores.scores[i] > 0.5 ? 1 : 0;
        }
        const double fbs_term = cross_entropy(scores.scores, score_labels);

        std::vector<std::uint8_t> positive(k, 0);
        std::vector<double> gt_scales(k, 0.0);
        std::vector<int> class_labels(k, 0);
        FeatureMatrix gt_centers = FeatureMatrix::Zero(k, 3);
        FeatureMatrix gt_sizes = FeatureMatrix::Zero(k, 3);
        for (int i = 0; i < k; ++i) {
            if (!assignments[i].positive) {
                continue;
            }
            const AABox& box = scene.boxes[assignments[i].box];
            positive[i] = 1;
            gt_scales[i] = half_diagonal(box);
            class_labels[i] = box.class_id;
            gt_centers.row(i) << box.center.x, box.center.y, box.center.z;
            gt_sizes.row(i) << box.sx, box.sy, box.sz;
            ++diag.n_positive_clusters;
        }
        const LossTerm rbfg_term =
            rbfg_loss(coarse_probs, coarse_labels, fine_probs, fine_labels, scales, gt_scales,
                      positive, cfg.loss, cfg.smooth_l1_beta);

        std::vector<double> obj_probs(k);
        for (int i = 0; i < k; ++i) {
            obj_probs[i] = objectness(i);
        }
        const double obj_term = cross_entropy(obj_probs, positive);

        const LossTerm box_term = box_loss(pred_centers, pred_sizes, gt_centers, gt_sizes,
                                           positive, cfg.smooth_l1_beta);
        const LossTerm sem_term = sem_cls_loss(class_probs, class_labels, positive);

        diag.loss_components = {vote_term.value, fbs_term,      rbfg_term.value,
                                obj_term,        box_term.value, sem_term.value};
        diag.overall = overall_loss(diag.loss_components, cfg.loss);
        diag.vote_loss_empty = vote_term.empty_set;
        diag.scale_loss_empty = rbfg_term.empty_set;
        diag.box_loss_empty = box_term.empty_set;
        diag.sem_loss_empty = sem_term.empty_set;
        return Shape{6};
    });

    diag.total_millis = ms_between(t_begin, Clock::now());
    return result;
}

std::vector<AblationRow> ablate(const SyntheticScene& scene, const PipelineConfig& cfg,
                                const WeightBundle& weights) {
    const std::array<std::tuple<const char*, bool, bool, bool>, 4> grid = {{
        {"baseline", false, false, false},
        {"ppc", true, false, false},
        {"ppc+ooc", true, true, false},
        {"ppc+ooc+gsc", true, true, true},
    }};
    std::vector<AblationRow> rows;
    rows.reserve(grid.size());
    for (const auto& [label, use_ppc, use_ooc, use_gsc] : grid) {
        PipelineConfig variant = cfg;
        variant.use_ppc = use_ppc;
        variant.use_ooc = use_ooc;
        variant.use_gsc = use_gsc;
        AblationRow row;
        row.label = label;
        row.ppc = use_ppc;
        row.ooc = use_ooc;
        row.gsc = use_gsc;
        row.detections = run_pipeline(scene, variant, weights).detections;
        row.map_value = map_at(row.detections, scene.boxes, 0.25).map_value;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_ablation_table(std::ostream& os, const std::vector<AblationRow>& rows) {
    os << "config\tppc\tooc\tgsc\tmAP@0.25\tdetections\n";
    for (const AblationRow& row : rows) {
        os << row.label << '\t' << (row.ppc ? 1 : 0) << '\t' << (row.ooc ? 1 : 0) << '\t'
           << (row.gsc ? 1 : 0) << '\t' << format_double(row.map_value) << '\t'
           << row.detections.size() << '\n';
    }
}

void write_diagnostics(std::ostream& os, const PipelineDiagnostics& diag) {
    os << "stage\tshape\tms\n";
    for (const StageRecord& s : diag.stages) {
        os << s.name << '\t';
        for (std::size_t i = 0; i < s.shape.size(); ++i) {
            os << (i ? "x" : "") << s.shape[i];
        }
        os << '\t' << format_double(s.millis) << '\n';
    }
    os << "rays_per_cluster\t" << diag.n_rays << "\n";
    os << "positive_clusters\t" << diag.n_positive_clusters << "\n";
    const LossComponents& lc = diag.loss_components;
    os << "loss_vote_reg\t" << format_double(lc.vote_reg)
       << (diag.vote_loss_empty ? "\t(no positives)" : "") << '\n';
    os << "loss_fbs\t" << format_double(lc.fbs) << '\n';
    os << "loss_rbfg\t" << format_double(lc.rbfg)
       << (diag.scale_loss_empty ? "\t(no positives)" : "") << '\n';
    os << "loss_obj_cls\t" << format_double(lc.obj_cls) << '\n';
    os << "loss_box\t" << format_double(lc.box) << (diag.box_loss_empty ? "\t(no positives)" : "")
       << '\n';
    os << "loss_sem_cls\t" << format_double(lc.sem_cls)
       << (diag.sem_loss_empty ? "\t(no positives)" : "") << '\n';
    os << "loss_overall\t" << format_double(diag.overall) << '\n';
    os << "total_ms\t" << format_double(diag.total_millis) << '\n';
}

}  // namespace sbmc
