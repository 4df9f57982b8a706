#pragma once

#include "sbmc/attention.hpp"
#include "sbmc/config.hpp"
#include "sbmc/nn.hpp"

#include <filesystem>

namespace sbmc {

/// Every learned block of the pipeline, forward-only. Built deterministically
/// from a seed or loaded from a columnar bundle file.
struct WeightBundle {
    MlpWeights sa_seed;          // (3 + C_in) -> C -> C
    MlpWeights vote;             // C -> 128 -> 3 + C (position offset, feature offset)
    MlpWeights scale_head;       // C -> C -> 1, softplus applied downstream
    MlpWeights anchor_sa_coarse; // (3 + C) -> 32
    MlpWeights anchor_sa_fine;
    MlpWeights mask_coarse;      // (32 + C) -> 32 -> 1, sigmoid applied downstream
    MlpWeights mask_fine;
    MlpWeights point_proj_coarse;  // Kc*32 -> 32
    MlpWeights point_proj_fine;    // Kf*32 -> 32
    MlpWeights ray_mlp_coarse;     // N*32 -> 256 -> 128 -> 128
    MlpWeights ray_mlp_fine;
    MlpWeights fuse;     // 256 -> 128 -> G
    MlpWeights combine;  // (C + G) -> C
    CgnlWeights ppc_w;
    CgnlWeights ooc_w;
    MlpWeights gsc_agg;      // 2C -> C -> C
    MlpWeights head_shared;  // C -> H
    MlpWeights head_obj;     // H -> 1, sigmoid
    MlpWeights head_box;     // H -> 6
    MlpWeights head_cls;     // H -> 18

    /// Checks that every block chains onto the widths the config implies.
    void validate_against(const PipelineConfig& cfg) const;
};

/// Deterministic bundle keyed by cfg.seed; every block gets its own stream.
WeightBundle default_weights(const PipelineConfig& cfg);

/// Zeroes the ppc/ooc transform maps and the gsc aggregation, turning all
/// three context modules into exact identities.
void zero_attention(WeightBundle& bundle);

void save_weights(const std::filesystem::path& path, const WeightBundle& bundle);

WeightBundle load_weights(const std::filesystem::path& path);

}  // namespace sbmc
