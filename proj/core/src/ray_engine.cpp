#include "sbmc/ray_engine.hpp"

#include "sbmc/grouping.hpp"
#include "sbmc/io.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace sbmc {

std::vector<int> ray_distribution(int p_polar, int multiplier) {
    if (p_polar < 2) {
        throw std::invalid_argument("ray distribution needs at least 2 polar rings");
    }
    if (multiplier < 1) {
        throw std::invalid_argument("ray multiplier must be >= 1");
    }
    std::vector<int> counts(p_polar);
    counts[0] = 1;
    counts[p_polar - 1] = 1;
    const int mid2 = p_polar - 1;  // ring p is below the equator when 2p > P-1
    for (int p = 1; p < p_polar - 1; ++p) {
        counts[p] = (2 * p <= mid2) ? multiplier * p : multiplier * (p_polar - p - 1);
    }
    return counts;
}

RayFan generate_rays(int p_polar, int multiplier) {
    const std::vector<int> counts = ray_distribution(p_polar, multiplier);
    RayFan fan;
    fan.p_polar = p_polar;
    for (int p = 0; p < p_polar; ++p) {
        if (p == 0 || p == p_polar - 1) {
            fan.directions.push_back({0.0, 0.0, p == 0 ? 1.0 : -1.0});
            fan.polar_index.push_back(p);
            fan.azimuth_index.push_back(0);
            continue;
        }
        const double theta = std::numbers::pi * p / (p_polar - 1);
        const double st = std::sin(theta);
        const double ct = std::cos(theta);
        for (int a = 0; a < counts[p]; ++a) {
            const double psi = 2.0 * std::numbers::pi * a / counts[p];
            fan.directions.push_back({st * std::cos(psi), st * std::sin(psi), ct});
            fan.polar_index.push_back(p);
            fan.azimuth_index.push_back(a);
        }
    }
    return fan;
}

std::vector<Point3> anchor_positions(const Point3& center, const RayFan& fan, double length,
                                     int k) {
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw std::invalid_argument("ray length must be positive and finite");
    }
    if (k < 1) {
        throw std::invalid_argument("anchor count per ray must be >= 1");
    }
    std::vector<Point3> anchors;
    anchors.reserve(static_cast<std::size_t>(fan.size()) * k);
    for (const Point3& dir : fan.directions) {
        for (int j = 1; j <= k; ++j) {
            anchors.push_back(center + dir * ((j - 0.5) * length / k));
        }
    }
    return anchors;
}

std::vector<Point3> coarse_anchors(const Point3& center, const RayFan& fan, double length,
                                   int kc) {
    return anchor_positions(center, fan, length, kc);
}

std::vector<Point3> fine_anchors(const Point3& center, const RayFan& fan, double length, int kf) {
    return anchor_positions(center, fan, length, kf);
}

FeatureMatrix anchor_features(const PointCloud& cloud, const std::vector<Point3>& anchors,
                              double radius, const MlpWeights& mlp, int max_group) {
    return local_abstraction(cloud, anchors, radius, max_group, mlp);
}

std::vector<Point3> box_surface_points(const PointCloud& cloud, const AABox& box, double shell) {
    box.validate();
    if (!(shell >= 0.0)) {
        throw std::invalid_argument("surface shell must be non-negative");
    }
    std::vector<Point3> out;
    for (const Point3& p : cloud.positions) {
        if (!box.contains(p)) {
            continue;
        }
        const double gap_x = 0.5 * box.sx - std::abs(p.x - box.center.x);
        const double gap_y = 0.5 * box.sy - std::abs(p.y - box.center.y);
        const double gap_z = 0.5 * box.sz - std::abs(p.z - box.center.z);
        if (std::min({gap_x, gap_y, gap_z}) <= shell) {
            out.push_back(p);
        }
    }
    return out;
}

std::vector<std::uint8_t> surface_mask_oracle(const std::vector<Point3>& anchors,
                                              const AABox& box,
                                              const std::vector<Point3>& surface_points,
                                              double proximity) {
    box.validate();
    if (!(proximity > 0.0)) {
        throw std::invalid_argument("mask proximity must be positive");
    }
    const double r2 = proximity * proximity;
    std::vector<std::uint8_t> mask(anchors.size(), 0);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        for (const Point3& s : surface_points) {
            if (squared_distance(anchors[i], s) <= r2) {
                mask[i] = 1;
                break;
            }
        }
    }
    return mask;
}

std::vector<double> surface_mask_predict(const FeatureMatrix& anchor_feats,
                                         const Eigen::RowVectorXd& cluster_feat,
                                         const MlpWeights& mlp) {
    mlp.validate();
    if (mlp.in_width() != anchor_feats.cols() + cluster_feat.size()) {
        throw std::invalid_argument("mask mlp input width must be anchor + cluster width");
    }
    if (mlp.out_width() != 1) {
        throw std::invalid_argument("mask mlp must emit one logit");
    }
    Eigen::MatrixXd rows(anchor_feats.rows(), mlp.in_width());
    rows.leftCols(anchor_feats.cols()) = anchor_feats;
    rows.rightCols(cluster_feat.size()).rowwise() = cluster_feat;
    const Eigen::MatrixXd logits = mlp_forward(mlp, rows);
    std::vector<double> probs(anchor_feats.rows());
    for (int i = 0; i < anchor_feats.rows(); ++i) {
        probs[i] = sigmoid(logits(i, 0));
    }
    return probs;
}

FeatureMatrix apply_mask(const FeatureMatrix& feats, const std::vector<std::uint8_t>& mask) {
    if (static_cast<int>(mask.size()) != feats.rows()) {
        throw std::invalid_argument("mask length must match feature rows");
    }
    FeatureMatrix out = feats;
    for (int i = 0; i < out.rows(); ++i) {
        if (mask[i] == 0) {
            out.row(i).setZero();
        }
    }
    return out;
}

Eigen::RowVectorXd fuse_point_features(const FeatureMatrix& masked_feats,
                                       const MlpWeights& proj) {
    proj.validate();
    const Eigen::Index flat = masked_feats.rows() * masked_feats.cols();
    if (proj.in_width() != flat) {
        throw std::invalid_argument("ray projection input width must be K * F");
    }
    if (proj.out_width() != 32) {
        throw std::invalid_argument("ray projection must emit 32 channels");
    }
    Eigen::RowVectorXd row(flat);
    for (int i = 0; i < masked_feats.rows(); ++i) {
        row.segment(i * masked_feats.cols(), masked_feats.cols()) = masked_feats.row(i);
    }
    return mlp_forward_row(proj, row);
}

Eigen::RowVectorXd fuse_ray_features(const FeatureMatrix& ray_feats, const MlpWeights& mlp2) {
    mlp2.validate();
    const Eigen::Index flat = ray_feats.rows() * ray_feats.cols();
    if (mlp2.in_width() != flat) {
        throw std::invalid_argument("level mlp input width must be N * 32");
    }
    if (mlp2.out_width() != 128) {
        throw std::invalid_argument("level mlp must emit 128 channels");
    }
    Eigen::RowVectorXd row(flat);
    for (int i = 0; i < ray_feats.rows(); ++i) {
        row.segment(i * ray_feats.cols(), ray_feats.cols()) = ray_feats.row(i);
    }
    return mlp_forward_row(mlp2, row);
}

Eigen::RowVectorXd fuse_levels(const Eigen::RowVectorXd& mu_c, const Eigen::RowVectorXd& mu_f,
                               const MlpWeights& fuse_mlp) {
    fuse_mlp.validate();
    if (fuse_mlp.in_width() != mu_c.size() + mu_f.size()) {
        throw std::invalid_argument("fuse mlp input width must be |mu_c| + |mu_f|");
    }
    Eigen::RowVectorXd row(mu_c.size() + mu_f.size());
    row << mu_c, mu_f;
    return mlp_forward_row(fuse_mlp, row);
}

Eigen::RowVectorXd combine_features(const Eigen::RowVectorXd& cluster_feat,
                                    const Eigen::RowVectorXd& g, const MlpWeights& combine_mlp) {
    combine_mlp.validate();
    if (combine_mlp.in_width() != cluster_feat.size() + g.size()) {
        throw std::invalid_argument("combine mlp input width must be cluster + g width");
    }
    if (combine_mlp.out_width() != cluster_feat.size()) {
        throw std::invalid_argument("combine mlp must project back to the cluster width");
    }
    Eigen::RowVectorXd row(cluster_feat.size() + g.size());
    row << cluster_feat, g;
    return mlp_forward_row(combine_mlp, row);
}

double predict_scale(const Eigen::RowVectorXd& cluster_feat, const MlpWeights& mlp) {
    mlp.validate();
    if (mlp.in_width() != cluster_feat.size()) {
        throw std::invalid_argument("scale mlp input width must match cluster feature");
    }
    if (mlp.out_width() != 1) {
        throw std::invalid_argument("scale mlp must emit one value");
    }
    return softplus(mlp_forward_row(mlp, cluster_feat)(0));
}

void write_ray_table(std::ostream& os, const RayFan& fan) {
    os << "n p a dx dy dz\n";
    for (int i = 0; i < fan.size(); ++i) {
        const Point3& d = fan.directions[i];
        os << i << ' ' << fan.polar_index[i] << ' ' << fan.azimuth_index[i] << ' '
           << format_double(d.x) << ' ' << format_double(d.y) << ' ' << format_double(d.z)
           << '\n';
    }
}

}  // namespace sbmc
