#include "sbmc/attention.hpp"

#include <stdexcept>

namespace sbmc {

void CgnlWeights::validate() const {
    const auto same_shape = [&](const Eigen::MatrixXd& m) {
        return m.rows() == theta.rows() && m.cols() == theta.cols();
    };
    if (theta.rows() < 1 || theta.cols() < 1) {
        throw std::invalid_argument("cgnl transform maps must be non-empty");
    }
    if (!same_shape(phi) || !same_shape(g)) {
        throw std::invalid_argument("cgnl theta/phi/g must share one shape");
    }
    if (out.rows() != theta.cols() || out.cols() != theta.rows()) {
        throw std::invalid_argument("cgnl out map must be [C x C_t]");
    }
    if (!theta.allFinite() || !phi.allFinite() || !g.allFinite() || !out.allFinite()
        || !std::isfinite(scale)) {
        throw std::invalid_argument("cgnl weights must be finite");
    }
}

CgnlWeights CgnlWeights::zeros(int channels, int transform_width) {
    CgnlWeights w;
    w.theta = Eigen::MatrixXd::Zero(transform_width, channels);
    w.phi = w.theta;
    w.g = w.theta;
    w.out = Eigen::MatrixXd::Zero(channels, transform_width);
    w.scale = 1.0 / transform_width;
    return w;
}

FeatureMatrix cgnl(const FeatureMatrix& input, const CgnlWeights& w, int groups) {
    w.validate();
    if (input.cols() != w.channels()) {
        throw std::invalid_argument("cgnl input width must match weight channels");
    }
    const int ct = w.transform_width();
    if (groups < 1 || ct % groups != 0) {
        throw std::invalid_argument("cgnl groups must divide the transform width");
    }
    const Eigen::MatrixXd t = input * w.theta.transpose();  // [R x Ct]
    const Eigen::MatrixXd p = input * w.phi.transpose();
    const Eigen::MatrixXd v = input * w.g.transpose();

    Eigen::MatrixXd attended(input.rows(), ct);
    const int width = ct / groups;
    for (int b = 0; b < groups; ++b) {
        const auto tb = t.middleCols(b * width, width);
        const auto pb = p.middleCols(b * width, width);
        const auto vb = v.middleCols(b * width, width);
        attended.middleCols(b * width, width) = w.scale * (tb * (pb.transpose() * vb));
    }
    return input + attended * w.out.transpose();
}

SeedSet ppc(const SeedSet& seeds, const CgnlWeights& w, int groups) {
    SeedSet out;
    out.positions = seeds.positions;
    out.features = cgnl(seeds.features, w, groups);
    return out;
}

FeatureMatrix ooc(const ClusterSet& clusters, const VoteSet& votes, const MlpWeights& vote_mlp,
                  const CgnlWeights& w, int groups) {
    vote_mlp.validate();
    if (vote_mlp.in_width() != votes.features.cols()) {
        throw std::invalid_argument("ooc vote mlp input width must match vote features");
    }
    const Eigen::MatrixXd transformed = mlp_forward(vote_mlp, votes.features);
    FeatureMatrix pooled = FeatureMatrix::Zero(clusters.size(), transformed.cols());
    for (int k = 0; k < clusters.size(); ++k) {
        const auto& members = clusters.member_votes[k];
        if (members.empty()) {
            throw std::invalid_argument("ooc requires non-empty clusters");
        }
        Eigen::RowVectorXd acc = transformed.row(members[0]);
        for (std::size_t j = 1; j < members.size(); ++j) {
            acc = acc.cwiseMax(transformed.row(members[j]));
        }
        pooled.row(k) = acc;
    }
    return cgnl(pooled, w, groups);
}

GlobalContext global_context(const FeatureMatrix& patch_feats, const FeatureMatrix& cluster_feats,
                             const MlpWeights& agg_mlp) {
    agg_mlp.validate();
    if (patch_feats.rows() < 1 || cluster_feats.rows() < 1) {
        throw std::invalid_argument("global context needs at least one patch and one cluster");
    }
    if (agg_mlp.in_width() != cluster_feats.cols() + patch_feats.cols()) {
        throw std::invalid_argument("aggregation mlp input width must be cluster + patch width");
    }
    if (agg_mlp.out_width() != cluster_feats.cols()) {
        throw std::invalid_argument("aggregation mlp must emit the cluster width");
    }
    GlobalContext ctx;
    ctx.pooled_patches = channel_max_pool(patch_feats);
    ctx.pooled_clusters = channel_max_pool(cluster_feats);
    Eigen::RowVectorXd cat(ctx.pooled_clusters.size() + ctx.pooled_patches.size());
    cat << ctx.pooled_clusters, ctx.pooled_patches;
    ctx.aggregated = mlp_forward_row(agg_mlp, cat);
    return ctx;
}

FeatureMatrix gsc(const FeatureMatrix& patch_feats, const FeatureMatrix& cluster_feats,
                  const MlpWeights& agg_mlp, const FeatureMatrix& ooc_out) {
    const GlobalContext ctx = global_context(patch_feats, cluster_feats, agg_mlp);
    if (ooc_out.cols() != ctx.aggregated.size()) {
        throw std::invalid_argument("gsc output width must match the aggregated feature");
    }
    return ooc_out.rowwise() + ctx.aggregated;
}

}  // namespace sbmc
