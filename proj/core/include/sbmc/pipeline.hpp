#pragma once

#include "sbmc/config.hpp"
#include "sbmc/eval.hpp"
#include "sbmc/losses.hpp"
#include "sbmc/scene.hpp"
#include "sbmc/weights.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sbmc {

struct StageRecord {
    std::string name;
    std::vector<long long> shape;
    double millis = 0.0;
};

struct PipelineDiagnostics {
    std::vector<StageRecord> stages;
    int n_rays = 0;
    int n_positive_clusters = 0;
    LossComponents loss_components;
    double overall = 0.0;
    bool vote_loss_empty = false;
    bool scale_loss_empty = false;
    bool box_loss_empty = false;
    bool sem_loss_empty = false;
    double total_millis = 0.0;
};

struct PipelineResult {
    std::vector<Detection> detections;
    PipelineDiagnostics diagnostics;
};

/// Full forward pass over one scene. A failing stage raises a runtime error
/// naming the stage and listing the shapes completed so far.
PipelineResult run_pipeline(const SyntheticScene& scene, const PipelineConfig& cfg,
                            const WeightBundle& weights);

struct AblationRow {
    std::string label;
    bool ppc = false;
    bool ooc = false;
    bool gsc = false;
    double map_value = 0.0;
    std::vector<Detection> detections;
};

/// Runs the pipeline under the four context configurations (none, +ppc,
/// +ppc+ooc, all three) and scores each against the scene's boxes.
std::vector<AblationRow> ablate(const SyntheticScene& scene, const PipelineConfig& cfg,
                                const WeightBundle& weights);

void write_ablation_table(std::ostream& os, const std::vector<AblationRow>& rows);

void write_diagnostics(std::ostream& os, const PipelineDiagnostics& diag);

}  // namespace sbmc
