#include "sbmc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sbmc {
namespace {

int count_positive(const std::vector<std::uint8_t>& flags) {
    int n = 0;
    for (std::uint8_t f : flags) {
        n += (f != 0);
    }
    return n;
}

void check_rows(Eigen::Index rows, Eigen::Index cols, const FeatureMatrix& m, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
}

}  // namespace

void LossWeights::validate() const {
    for (double l : {lambda_vote_reg, lambda_fbs, lambda_rbfg, lambda_obj_cls, lambda_box,
                     lambda_sem_cls, lambda_scale_reg, lambda_c_cls, lambda_f_cls}) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw std::invalid_argument("loss weights must be finite and non-negative");
        }
    }
}

LossTerm vote_reg_loss(const FeatureMatrix& pred_offsets, const FeatureMatrix& gt_offsets,
                       const std::vector<std::uint8_t>& on_object, VoteNorm norm) {
    const Eigen::Index m = pred_offsets.rows();
    check_rows(m, 3, gt_offsets, "vote_reg_loss gt");
    if (pred_offsets.cols() != 3 || static_cast<Eigen::Index>(on_object.size()) != m) {
        throw std::invalid_argument("vote_reg_loss: inputs must be [M x 3] with M flags");
    }
    const int pos = count_positive(on_object);
    if (pos == 0) {
        return {0.0, true};
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (on_object[i] == 0) {
            continue;
        }
        const Eigen::RowVector3d d = pred_offsets.row(i) - gt_offsets.row(i);
        sum += (norm == VoteNorm::l2) ? d.norm() : d.cwiseAbs().sum();
    }
    return {sum / pos, false};
}

FeatureMatrix vote_reg_grad(const FeatureMatrix& pred_offsets, const FeatureMatrix& gt_offsets,
                            const std::vector<std::uint8_t>& on_object, VoteNorm norm) {
    const Eigen::Index m = pred_offsets.rows();
    FeatureMatrix grad = FeatureMatrix::Zero(m, 3);
    const int pos = count_positive(on_object);
    if (pos == 0) {
        return grad;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (on_object[i] == 0) {
            continue;
        }
        const Eigen::RowVector3d d = pred_offsets.row(i) - gt_offsets.row(i);
        if (norm == VoteNorm::l2) {
            const double n = d.norm();
            if (n > 0.0) {
                grad.row(i) = d / (n * pos);
            }
        } else {
            grad.row(i) = d.unaryExpr([](double v) {
                return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
            }) / pos;
        }
    }
    return grad;
}

LossTerm scale_reg_loss(const std::vector<double>& pred_scales,
                        const std::vector<double>& gt_half_diagonals,
                        const std::vector<std::uint8_t>& positive, double beta) {
    if (pred_scales.size() != gt_half_diagonals.size()
        || pred_scales.size() != positive.size()) {
        throw std::invalid_argument("scale_reg_loss: length mismatch");
    }
    const int pos = count_positive(positive);
    if (pos == 0) {
        return {0.0, true};
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < pred_scales.size(); ++i) {
        if (positive[i] != 0) {
            sum += smooth_l1(pred_scales[i] - gt_half_diagonals[i], beta);
        }
    }
    return {sum / pos, false};
}

std::vector<double> scale_reg_grad(const std::vector<double>& pred_scales,
                                   const std::vector<double>& gt_half_diagonals,
                                   const std::vector<std::uint8_t>& positive, double beta) {
    std::vector<double> grad(pred_scales.size(), 0.0);
    const int pos = count_positive(positive);
    if (pos == 0) {
        return grad;
    }
    for (std::size_t i = 0; i < pred_scales.size(); ++i) {
        if (positive[i] != 0) {
            grad[i] = smooth_l1_grad(pred_scales[i] - gt_half_diagonals[i], beta) / pos;
        }
    }
    return grad;
}

LossTerm rbfg_loss(const std::vector<double>& coarse_probs,
                   const std::vector<std::uint8_t>& coarse_labels,
                   const std::vector<double>& fine_probs,
                   const std::vector<std::uint8_t>& fine_labels,
                   const std::vector<double>& pred_scales, const std::vector<double>& gt_scales,
                   const std::vector<std::uint8_t>& positive, const LossWeights& w, double beta) {
    w.validate();
    const LossTerm scale = scale_reg_loss(pred_scales, gt_scales, positive, beta);
    const double value = w.lambda_scale_reg * scale.value
                         + w.lambda_c_cls * cross_entropy(coarse_probs, coarse_labels)
                         + w.lambda_f_cls * cross_entropy(fine_probs, fine_labels);
    return {value, scale.empty_set};
}

LossTerm box_loss(const FeatureMatrix& pred_centers, const FeatureMatrix& pred_sizes,
                  const FeatureMatrix& gt_centers, const FeatureMatrix& gt_sizes,
                  const std::vector<std::uint8_t>& positive, double beta) {
    const Eigen::Index k = pred_centers.rows();
    check_rows(k, 3, pred_sizes, "box_loss pred sizes");
    check_rows(k, 3, gt_centers, "box_loss gt centers");
    check_rows(k, 3, gt_sizes, "box_loss gt sizes");
    if (pred_centers.cols() != 3 || static_cast<Eigen::Index>(positive.size()) != k) {
        throw std::invalid_argument("box_loss: inputs must be [K x 3] with K flags");
    }
    const int pos = count_positive(positive);
    if (pos == 0) {
        return {0.0, true};
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (positive[i] == 0) {
            continue;
        }
        for (int a = 0; a < 3; ++a) {
            sum += smooth_l1(pred_centers(i, a) - gt_centers(i, a), beta);
            sum += smooth_l1(pred_sizes(i, a) - gt_sizes(i, a), beta);
        }
    }
    return {sum / pos, false};
}

LossTerm sem_cls_loss(const FeatureMatrix& class_probs, const std::vector<int>& labels,
                      const std::vector<std::uint8_t>& positive) {
    const Eigen::Index k = class_probs.rows();
    if (static_cast<Eigen::Index>(labels.size()) != k
        || static_cast<Eigen::Index>(positive.size()) != k) {
        throw std::invalid_argument("sem_cls_loss: length mismatch");
    }
    const int pos = count_positive(positive);
    if (pos == 0) {
        return {0.0, true};
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (positive[i] == 0) {
            continue;
        }
        if (labels[i] < 0 || labels[i] >= class_probs.cols()) {
            throw std::invalid_argument("sem_cls_loss: label out of range");
        }
        const double p = std::clamp(class_probs(i, labels[i]), kProbClamp, 1.0 - kProbClamp);
        sum -= std::log(p);
    }
    return {sum / pos, false};
}

FeatureMatrix sem_cls_grad(const FeatureMatrix& class_probs, const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& positive) {
    FeatureMatrix grad = FeatureMatrix::Zero(class_probs.rows(), class_probs.cols());
    const int pos = count_positive(positive);
    if (pos == 0) {
        return grad;
    }
    for (Eigen::Index i = 0; i < class_probs.rows(); ++i) {
        if (positive[i] == 0) {
            continue;
        }
        const double p = class_probs(i, labels[i]);
        if (p > kProbClamp && p < 1.0 - kProbClamp) {
            grad(i, labels[i]) = -1.0 / (p * pos);
        }
    }
    return grad;
}

double overall_loss(const LossComponents& c, const LossWeights& w) {
    w.validate();
    return w.lambda_vote_reg * c.vote_reg + w.lambda_fbs * c.fbs + w.lambda_rbfg * c.rbfg
           + w.lambda_obj_cls * c.obj_cls + w.lambda_box * c.box + w.lambda_sem_cls * c.sem_cls;
}

}  // namespace sbmc
