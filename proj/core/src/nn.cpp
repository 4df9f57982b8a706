#include "sbmc/nn.hpp"

#include "sbmc/rng.hpp"

#include <algorithm>
#include <cmath>

namespace sbmc {

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double apply_activation(Activation act, double x) {
    switch (act) {
        case Activation::identity: return x;
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::sigmoid: return sigmoid(x);
        case Activation::softplus: return softplus(x);
    }
    return x;
}

void MlpWeights::validate() const {
    for (const auto& layer : layers) {
        if (layer.weight.rows() != layer.bias.size())
            throw std::invalid_argument("mlp layer bias width does not match weight rows");
        if (!layer.weight.allFinite() || !layer.bias.allFinite())
            throw std::invalid_argument("non-finite mlp weight");
    }
    for (std::size_t i = 1; i < layers.size(); ++i)
        if (layers[i].weight.cols() != layers[i - 1].weight.rows())
            throw std::invalid_argument("mlp layer widths do not chain");
}

static void activate_in_place(FeatureMatrix& x, Activation act) {
    switch (act) {
        case Activation::identity: return;
        case Activation::relu:
            x = x.cwiseMax(0.0);
            return;
        case Activation::sigmoid:
            x = x.unaryExpr([](double v) { return sigmoid(v); });
            return;
        case Activation::softplus:
            x = x.unaryExpr([](double v) { return softplus(v); });
            return;
    }
}

FeatureMatrix mlp_forward(const MlpWeights& w, const FeatureMatrix& x) {
    if (w.layers.empty()) throw std::invalid_argument("empty mlp");
    if (x.cols() != w.in_width())
        throw std::invalid_argument("mlp input width mismatch: got " + std::to_string(x.cols()) +
                                    ", expected " + std::to_string(w.in_width()));
    FeatureMatrix h = x;
    for (const auto& layer : w.layers) {
        h = (h * layer.weight.transpose()).rowwise() + layer.bias.transpose();
        activate_in_place(h, layer.act);
    }
    return h;
}

Eigen::RowVectorXd mlp_forward_row(const MlpWeights& w, const Eigen::RowVectorXd& x) {
    FeatureMatrix m(1, x.size());
    m.row(0) = x;
    return mlp_forward(w, m).row(0);
}

Eigen::RowVectorXd channel_max_pool(const FeatureMatrix& x) {
    if (x.rows() == 0) throw std::invalid_argument("channel_max_pool on empty input");
    return x.colwise().maxCoeff();
}

double smooth_l1(double x, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1 beta must be positive");
    const double a = std::abs(x);
    if (a < beta) return 0.5 * x * x / beta;
    return a - 0.5 * beta;
}

double smooth_l1_grad(double x, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1 beta must be positive");
    if (std::abs(x) < beta) return x / beta;
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

static double clamp_prob(double p) {
    return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

double cross_entropy(const std::vector<double>& probs, const std::vector<std::uint8_t>& labels) {
    if (probs.size() != labels.size())
        throw std::invalid_argument("cross_entropy size mismatch");
    if (probs.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = clamp_prob(probs[i]);
        sum -= labels[i] ? std::log(p) : std::log1p(-p);
    }
    return sum / static_cast<double>(probs.size());
}

std::vector<double> cross_entropy_grad(const std::vector<double>& probs,
                                       const std::vector<std::uint8_t>& labels) {
    if (probs.size() != labels.size())
        throw std::invalid_argument("cross_entropy size mismatch");
    std::vector<double> grad(probs.size(), 0.0);
    const double n = static_cast<double>(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        // Saturated clamp: the loss is locally constant in p.
        if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;
        const double y = labels[i] ? 1.0 : 0.0;
        grad[i] = (p - y) / (p * (1.0 - p)) / n;
    }
    return grad;
}

double grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                  const Eigen::VectorXd& params,
                  const Eigen::VectorXd& analytic_grad,
                  double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("grad_check eps must be positive");
    if (params.size() != analytic_grad.size())
        throw std::invalid_argument("grad_check size mismatch");
    double worst = 0.0;
    Eigen::VectorXd p = params;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double orig = p(i);
        p(i) = orig + eps;
        const double fp = f(p);
        p(i) = orig - eps;
        const double fm = f(p);
        p(i) = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::invalid_argument("grad_check: non-finite function value");
        const double numeric = (fp - fm) / (2.0 * eps);
        const double analytic = analytic_grad(i);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
}

Eigen::MatrixXd init_weights(int rows, int cols, std::uint64_t seed, std::uint64_t stream) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ (static_cast<std::uint64_t>(rows) << 32 | static_cast<std::uint64_t>(cols)));
    key = splitmix64(key ^ stream);
    CounterRng rng(key);
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            w(r, c) = rng.uniform(-bound, bound);
    return w;
}

MlpWeights init_mlp(const std::vector<int>& widths, const std::vector<Activation>& acts,
                    std::uint64_t seed, std::uint64_t stream) {
    if (widths.size() < 2 || acts.size() != widths.size() - 1)
        throw std::invalid_argument("init_mlp: need n+1 widths for n activations");
    MlpWeights w;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        MlpLayer layer;
        layer.weight = init_weights(widths[i + 1], widths[i], seed, stream * 1009 + i);
        layer.bias = Eigen::VectorXd::Zero(widths[i + 1]);
        layer.act = acts[i];
        w.layers.push_back(std::move(layer));
    }
    return w;
}

MlpWeights identity_mlp(int width) {
    MlpLayer layer;
    layer.weight = Eigen::MatrixXd::Identity(width, width);
    layer.bias = Eigen::VectorXd::Zero(width);
    layer.act = Activation::identity;
    return MlpWeights{{layer}};
}

FeatureMatrix softmax_rows(const FeatureMatrix& logits) {
    FeatureMatrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(r).array() - m).exp();
        out.row(r) = e / e.sum();
    }
    return out;
}

}  // namespace sbmc
