#pragma once

#include "sbmc/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace sbmc {

/// Every knob of the detection pipeline. Loaded from key=value text where
/// keys match the field names; unknown keys are rejected.
struct PipelineConfig {
    int n_input_points = 2048;
    int n_input_channels = 1;
    int n_seeds = 1024;
    int upsampled_seeds = 2048;
    int n_clusters = 256;

    int p_polar = 5;
    int ray_multiplier = 4;
    int kc = 6;
    int kf = 12;

    double seed_group_radius = 0.2;
    double cluster_radius = 0.3;
    double anchor_radius = 0.0;  // 0 derives half the coarse bin length per cluster
    double surface_proximity = 0.1;
    double surface_shell = 0.05;
    double positive_radius = 0.3;
    double smooth_l1_beta = 1.0;

    int kappa = -1;   // -1 derives half the input points
    int m_fore = -1;  // -1 derives half the seeds
    bool use_fbs = true;

    int group_size_seed = 16;
    int group_size_anchor = 8;
    int knn_upsample = 3;

    bool use_ppc = true;
    bool use_ooc = true;
    bool use_gsc = true;
    int cgnl_groups = 1;
    int cgnl_transform_width = 32;

    int seed_feature_width = 64;
    int g_width = 64;
    int head_hidden_width = 128;

    VoteNorm vote_norm = VoteNorm::l2;
    LossWeights loss;

    std::uint64_t seed = 1;

    void validate() const;

    int effective_kappa() const;
    int effective_m_fore() const;
    double effective_anchor_radius(double ray_length) const;
};

/// Parses key=value lines; '#' starts a comment, blank lines are skipped.
PipelineConfig parse_config(std::istream& is);

PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace sbmc
