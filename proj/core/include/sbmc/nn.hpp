#pragma once

#include "sbmc/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace sbmc {

enum class Activation { identity, relu, sigmoid, softplus };

double apply_activation(Activation act, double x);

/// Numerically stable sigmoid / softplus, shared by layer code and heads.
double sigmoid(double x);
double softplus(double x);

struct MlpLayer {
    Eigen::MatrixXd weight;  // [out x in]
    Eigen::VectorXd bias;    // [out]
    Activation act = Activation::identity;
};

/// A stack of affine layers. Adjacent widths must chain.
struct MlpWeights {
    std::vector<MlpLayer> layers;

    int in_width() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
    int out_width() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
    void validate() const;
};

/// Row-wise forward pass: x [R x in] -> [R x out].
FeatureMatrix mlp_forward(const MlpWeights& w, const FeatureMatrix& x);

/// Forward pass for a single row.
Eigen::RowVectorXd mlp_forward_row(const MlpWeights& w, const Eigen::RowVectorXd& x);

/// Per-channel maximum over rows. Throws on empty input.
Eigen::RowVectorXd channel_max_pool(const FeatureMatrix& x);

/// 0.5 x^2 / beta inside |x| < beta, |x| - beta/2 outside.
double smooth_l1(double x, double beta);

/// Derivative of smooth_l1; the kink at |x| = beta takes the linear branch.
double smooth_l1_grad(double x, double beta);

inline constexpr double kProbClamp = 1e-7;

/// Mean binary cross-entropy with probabilities clamped to
/// [kProbClamp, 1 - kProbClamp]. Empty input yields 0.
double cross_entropy(const std::vector<double>& probs, const std::vector<std::uint8_t>& labels);

/// d(cross_entropy)/d(prob_i); zero where the clamp saturates.
std::vector<double> cross_entropy_grad(const std::vector<double>& probs,
                                       const std::vector<std::uint8_t>& labels);

/// Central-difference check of an analytic gradient. Returns the max over
/// parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                  const Eigen::VectorXd& params,
                  const Eigen::VectorXd& analytic_grad,
                  double eps);

/// Deterministic uniform(-b, b) fill with b = sqrt(6 / (in + out)), keyed by
/// (seed, shape, stream). Identical output on any platform.
Eigen::MatrixXd init_weights(int rows, int cols, std::uint64_t seed, std::uint64_t stream = 0);

/// Glorot-initialised MLP with zero biases; stream ids separate the layers.
MlpWeights init_mlp(const std::vector<int>& widths, const std::vector<Activation>& acts,
                    std::uint64_t seed, std::uint64_t stream = 0);

/// Single identity layer of the given width (weight = I, bias = 0).
MlpWeights identity_mlp(int width);

/// Row-wise softmax.
FeatureMatrix softmax_rows(const FeatureMatrix& logits);

}  // namespace sbmc
