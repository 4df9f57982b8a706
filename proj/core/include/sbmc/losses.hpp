#pragma once

#include "sbmc/nn.hpp"
#include "sbmc/types.hpp"

#include <cstdint>
#include <vector>

namespace sbmc {

struct LossWeights {
    double lambda_vote_reg = 1.0;
    double lambda_fbs = 1.0;
    double lambda_rbfg = 1.0;
    double lambda_obj_cls = 1.0;
    double lambda_box = 1.0;
    double lambda_sem_cls = 1.0;
    double lambda_scale_reg = 1.0;
    double lambda_c_cls = 1.0;
    double lambda_f_cls = 1.0;

    void validate() const;
};

/// Loss value plus a flag raised when the supervised subset was empty and the
/// value was defined to zero.
struct LossTerm {
    double value = 0.0;
    bool empty_set = false;
};

enum class VoteNorm { l2, l1 };

/// Mean per-seed offset error over seeds lying on an object surface.
LossTerm vote_reg_loss(const FeatureMatrix& pred_offsets, const FeatureMatrix& gt_offsets,
                       const std::vector<std::uint8_t>& on_object, VoteNorm norm = VoteNorm::l2);

/// d loss / d pred_offsets; zero rows for off-object seeds and at the norm's
/// kink.
FeatureMatrix vote_reg_grad(const FeatureMatrix& pred_offsets, const FeatureMatrix& gt_offsets,
                            const std::vector<std::uint8_t>& on_object,
                            VoteNorm norm = VoteNorm::l2);

/// Mean smooth-l1 between predicted ray lengths and ground-truth half
/// diagonals over positive clusters.
LossTerm scale_reg_loss(const std::vector<double>& pred_scales,
                        const std::vector<double>& gt_half_diagonals,
                        const std::vector<std::uint8_t>& positive, double beta = 1.0);

std::vector<double> scale_reg_grad(const std::vector<double>& pred_scales,
                                   const std::vector<double>& gt_half_diagonals,
                                   const std::vector<std::uint8_t>& positive, double beta = 1.0);

/// Ray-based feature grouping loss: weighted scale regression plus the coarse
/// and fine mask cross entropies.
LossTerm rbfg_loss(const std::vector<double>& coarse_probs,
                   const std::vector<std::uint8_t>& coarse_labels,
                   const std::vector<double>& fine_probs,
                   const std::vector<std::uint8_t>& fine_labels,
                   const std::vector<double>& pred_scales, const std::vector<double>& gt_scales,
                   const std::vector<std::uint8_t>& positive, const LossWeights& w,
                   double beta = 1.0);

/// Mean smooth-l1 over the six box components (center offset and size
/// residual) of positive clusters.
LossTerm box_loss(const FeatureMatrix& pred_centers, const FeatureMatrix& pred_sizes,
                  const FeatureMatrix& gt_centers, const FeatureMatrix& gt_sizes,
                  const std::vector<std::uint8_t>& positive, double beta = 1.0);

/// Mean multi-class cross entropy of the labeled class probability over
/// positive clusters.
LossTerm sem_cls_loss(const FeatureMatrix& class_probs, const std::vector<int>& labels,
                      const std::vector<std::uint8_t>& positive);

/// d loss / d class_probs, zero outside the labeled column and off positives.
FeatureMatrix sem_cls_grad(const FeatureMatrix& class_probs, const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& positive);

struct LossComponents {
    double vote_reg = 0.0;
    double fbs = 0.0;
    double rbfg = 0.0;
    double obj_cls = 0.0;
    double box = 0.0;
    double sem_cls = 0.0;
};

double overall_loss(const LossComponents& c, const LossWeights& w);

}  // namespace sbmc
