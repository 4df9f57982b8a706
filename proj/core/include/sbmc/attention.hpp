#pragma once

#include "sbmc/grouping.hpp"
#include "sbmc/nn.hpp"
#include "sbmc/types.hpp"

namespace sbmc {

/// Linear maps of one compact-generalized non-local block. theta/phi/g are
/// [C_t x C], out is [C x C_t].
struct CgnlWeights {
    Eigen::MatrixXd theta;
    Eigen::MatrixXd phi;
    Eigen::MatrixXd g;
    Eigen::MatrixXd out;
    double scale = 0.0;

    int channels() const { return static_cast<int>(theta.cols()); }
    int transform_width() const { return static_cast<int>(theta.rows()); }
    void validate() const;

    /// All-zero maps for C channels: cgnl becomes the identity.
    static CgnlWeights zeros(int channels, int transform_width);
};

/// Pooled summaries feeding the scene-level aggregation.
struct GlobalContext {
    Eigen::RowVectorXd pooled_patches;
    Eigen::RowVectorXd pooled_clusters;
    Eigen::RowVectorXd aggregated;
};

/// Non-local attention with dot-product similarity evaluated associatively:
/// out(scale * T * (Phi^T G)) + input. With `groups` > 1 the transform
/// channels split into contiguous blocks attended independently.
FeatureMatrix cgnl(const FeatureMatrix& input, const CgnlWeights& w, int groups = 1);

/// Patch-level context: cgnl over seed features, positions untouched.
SeedSet ppc(const SeedSet& seeds, const CgnlWeights& w, int groups = 1);

/// Object-level context: per cluster, member vote features through vote_mlp,
/// channel max-pool, then cgnl over the stacked [K x C] matrix.
FeatureMatrix ooc(const ClusterSet& clusters, const VoteSet& votes, const MlpWeights& vote_mlp,
                  const CgnlWeights& w, int groups = 1);

/// Pools clusters and patches channel-wise and aggregates the concatenation
/// (clusters first) to the cluster width.
GlobalContext global_context(const FeatureMatrix& patch_feats, const FeatureMatrix& cluster_feats,
                             const MlpWeights& agg_mlp);

/// Scene-level context: broadcast-adds the aggregated global feature to every
/// row of ooc_out.
FeatureMatrix gsc(const FeatureMatrix& patch_feats, const FeatureMatrix& cluster_feats,
                  const MlpWeights& agg_mlp, const FeatureMatrix& ooc_out);

}  // namespace sbmc
