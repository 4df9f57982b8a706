#pragma once

#include "sbmc/nn.hpp"
#include "sbmc/types.hpp"

#include <vector>

namespace sbmc {

/// Abstracted points: one position and one feature row per seed.
struct SeedSet {
    std::vector<Point3> positions;
    FeatureMatrix features;  // [M x C]

    int size() const { return static_cast<int>(positions.size()); }
};

/// Seeds shifted toward object centers in both position and feature space.
struct VoteSet {
    std::vector<Point3> positions;
    FeatureMatrix features;        // [M x C]
    std::vector<int> source_seed;  // identity map from votes to seeds

    int size() const { return static_cast<int>(positions.size()); }
};

struct ClusterSet {
    std::vector<Point3> centers;
    FeatureMatrix features;                      // [K x C]
    std::vector<std::vector<int>> member_votes;  // vote indices, nearest first
    std::vector<int> center_vote;                // vote index of each center

    int size() const { return static_cast<int>(centers.size()); }
};

/// Fixed-radius neighbor index over a point set. Cell size equals the query
/// radius; queries return exact results, the grid only prunes candidates.
class UniformGrid {
  public:
    UniformGrid(const std::vector<Point3>& points, double cell_size);

    /// Indices within `radius` of `q` (radius <= cell size), sorted by
    /// (distance, index) ascending, at most max_group entries. max_group < 0
    /// disables truncation.
    std::vector<int> query(const Point3& q, double radius, int max_group) const;

  private:
    const std::vector<Point3>& points_;
    double cell_;
    double inv_cell_;
    std::vector<std::pair<std::uint64_t, int>> cells_;  // sorted (cell key, point index)

    std::uint64_t key_of(const Point3& p) const;
};

/// Per center, the points within `radius`, nearest first (ties by index),
/// truncated at max_group. Empty groups are allowed.
std::vector<std::vector<int>> ball_query(const PointCloud& cloud,
                                         const std::vector<Point3>& centers, double radius,
                                         int max_group);

/// PointNet-style local abstraction at arbitrary group centers: ball-query
/// members, translate to center-relative coordinates, concatenate with the
/// member feature, run the mlp per member, channel-wise max-pool. Empty
/// groups pool to the zero vector.
FeatureMatrix local_abstraction(const PointCloud& cloud, const std::vector<Point3>& centers,
                                double radius, int max_group, const MlpWeights& mlp);

/// local_abstraction with group centers taken from the cloud itself.
SeedSet set_abstraction(const PointCloud& cloud, const std::vector<int>& sample_indices,
                        double radius, int max_group, const MlpWeights& mlp);

/// Inverse-distance interpolation of coarse features onto target positions
/// using the k nearest coarse points (weights 1/(d + 1e-8), normalised). A
/// target coincident with a coarse point copies that feature directly.
FeatureMatrix propagate_features(const SeedSet& coarse, const std::vector<Point3>& targets, int k);

/// Element-wise offset application in position and feature space.
VoteSet apply_votes(const SeedSet& seeds, const FeatureMatrix& offsets_xyz,
                    const FeatureMatrix& offsets_feat);

/// Selects k cluster centers by fps over vote positions and assigns each
/// center the votes within `radius`, nearest first. Cluster features are the
/// channel-wise max over member features, optionally transformed by
/// `member_mlp` first.
ClusterSet cluster_votes(const VoteSet& votes, int k, double radius,
                         const MlpWeights* member_mlp = nullptr);

}  // namespace sbmc
