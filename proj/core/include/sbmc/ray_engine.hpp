#pragma once

#include "sbmc/nn.hpp"
#include "sbmc/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace sbmc {

/// Standardized directions emitted from a cluster center: P polar rings
/// between +z and -z, each ring carrying an even azimuth spread.
struct RayFan {
    std::vector<Point3> directions;
    std::vector<int> polar_index;
    std::vector<int> azimuth_index;
    int p_polar = 0;

    int size() const { return static_cast<int>(directions.size()); }
};

/// Anchor points along every ray of a fan at one refinement level, plus the
/// local features and surface mask attached to them. Entries are ray-major:
/// slot (n, j) lives at n*k + j.
struct AnchorGrid {
    enum class Level { coarse, fine };

    Level level = Level::coarse;
    int n_rays = 0;
    int k = 0;
    std::vector<Point3> positions;   // [n_rays * k]
    FeatureMatrix features;          // [n_rays * k x F]
    std::vector<std::uint8_t> mask;  // [n_rays * k], 0 or 1

    int index(int ray, int slot) const { return ray * k + slot; }
};

/// Output of the coarse-to-fine fusion chain for one cluster.
struct FusedFeature {
    FeatureMatrix ray_features_coarse;  // [N x 32]
    FeatureMatrix ray_features_fine;    // [N x 32]
    Eigen::RowVectorXd mu_coarse;       // 128
    Eigen::RowVectorXd mu_fine;         // 128
    Eigen::RowVectorXd fused;           // g
};

/// Number of azimuth steps per polar ring: a single ray at each pole, 4*p on
/// the way down to the equator and mirrored after it. `multiplier` replaces
/// the 4.
std::vector<int> ray_distribution(int p_polar, int multiplier = 4);

/// Builds the fan for P polar rings. Pole rays are exactly (0,0,+/-1); rays
/// are ordered by (polar ring, azimuth step).
RayFan generate_rays(int p_polar, int multiplier = 4);

/// Bin-center anchors: slot k (1-based) sits at center + dir*(k-0.5)*length/K.
std::vector<Point3> anchor_positions(const Point3& center, const RayFan& fan, double length,
                                     int k);
std::vector<Point3> coarse_anchors(const Point3& center, const RayFan& fan, double length,
                                   int kc);
std::vector<Point3> fine_anchors(const Point3& center, const RayFan& fan, double length, int kf);

/// Local feature per anchor: set abstraction with the anchor as group center.
/// max_group < 0 disables truncation.
FeatureMatrix anchor_features(const PointCloud& cloud, const std::vector<Point3>& anchors,
                              double radius, const MlpWeights& mlp, int max_group = -1);

/// Scene points inside `box` and within `shell` of its nearest face.
std::vector<Point3> box_surface_points(const PointCloud& cloud, const AABox& box,
                                       double shell = 0.05);

/// Ground-truth mask: 1 iff some surface point of `box` lies within
/// `proximity` of the anchor.
std::vector<std::uint8_t> surface_mask_oracle(const std::vector<Point3>& anchors,
                                              const AABox& box,
                                              const std::vector<Point3>& surface_points,
                                              double proximity);

/// Predicted mask probability per anchor: sigmoid(mlp(anchor_feat (+) cluster_feat)).
std::vector<double> surface_mask_predict(const FeatureMatrix& anchor_feats,
                                         const Eigen::RowVectorXd& cluster_feat,
                                         const MlpWeights& mlp);

/// Zeroes rows whose mask entry is 0.
FeatureMatrix apply_mask(const FeatureMatrix& feats, const std::vector<std::uint8_t>& mask);

/// Concatenates the K masked anchor features of one ray in slot order and
/// projects them to a 32-wide ray feature.
Eigen::RowVectorXd fuse_point_features(const FeatureMatrix& masked_feats, const MlpWeights& proj);

/// Concatenates the per-ray features in fan order and maps them through a
/// two-hidden-layer mlp to the 128-wide level feature mu.
Eigen::RowVectorXd fuse_ray_features(const FeatureMatrix& ray_feats, const MlpWeights& mlp2);

/// g = fuse_mlp(mu_c (+) mu_f).
Eigen::RowVectorXd fuse_levels(const Eigen::RowVectorXd& mu_c, const Eigen::RowVectorXd& mu_f,
                               const MlpWeights& fuse_mlp);

/// Projects (cluster_feat (+) g) back to the cluster feature width.
Eigen::RowVectorXd combine_features(const Eigen::RowVectorXd& cluster_feat,
                                    const Eigen::RowVectorXd& g, const MlpWeights& combine_mlp);

/// Ray length for one cluster: softplus of a scalar mlp head, always > 0.
double predict_scale(const Eigen::RowVectorXd& cluster_feat, const MlpWeights& mlp);

/// Plain-text dump, one ray per row: ordinal, ring, azimuth step, direction.
void write_ray_table(std::ostream& os, const RayFan& fan);

}  // namespace sbmc
