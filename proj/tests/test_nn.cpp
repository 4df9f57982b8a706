#include <doctest.h>

#include "sbmc/nn.hpp"
#include "sbmc/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace sbmc;

namespace {

/// Plain-loop forward pass used as the oracle for mlp_forward.
FeatureMatrix slow_forward(const MlpWeights& w, const FeatureMatrix& x) {
    FeatureMatrix h = x;
    for (const MlpLayer& layer : w.layers) {
        FeatureMatrix next(h.rows(), layer.weight.rows());
        for (Eigen::Index r = 0; r < h.rows(); ++r) {
            for (Eigen::Index o = 0; o < layer.weight.rows(); ++o) {
                double acc = layer.bias(o);
                for (Eigen::Index i = 0; i < layer.weight.cols(); ++i) {
                    acc += layer.weight(o, i) * h(r, i);
                }
                next(r, o) = apply_activation(layer.act, acc);
            }
        }
        h = next;
    }
    return h;
}

}  // namespace

TEST_CASE("activations") {
    CHECK(apply_activation(Activation::identity, -2.5) == -2.5);
    CHECK(apply_activation(Activation::relu, -2.5) == 0.0);
    CHECK(apply_activation(Activation::relu, 2.5) == 2.5);
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    CHECK(sigmoid(-800.0) >= 0.0);  // no underflow blowup
    CHECK(sigmoid(800.0) <= 1.0);
    CHECK(softplus(0.0) == doctest::Approx(std::numbers::ln2));
    CHECK(softplus(1000.0) == doctest::Approx(1000.0));
    CHECK(softplus(-1000.0) == doctest::Approx(0.0));
    CHECK(std::isfinite(softplus(710.0)));  // naive log(1+exp(x)) overflows here
}

TEST_CASE("mlp forward matches a plain-loop oracle") {
    const MlpWeights w = init_mlp({3, 5, 2}, {Activation::relu, Activation::identity}, 7);
    FeatureMatrix x = init_weights(4, 3, 8);
    const FeatureMatrix got = mlp_forward(w, x);
    const FeatureMatrix want = slow_forward(w, x);
    REQUIRE(got.rows() == 4);
    REQUIRE(got.cols() == 2);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);

    const Eigen::RowVectorXd row = mlp_forward_row(w, x.row(2));
    CHECK((row - got.row(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp rejects mismatched shapes") {
    MlpWeights w = init_mlp({3, 4, 2}, {Activation::relu, Activation::identity}, 1);
    FeatureMatrix x(2, 5);
    x.setZero();
    CHECK_THROWS_AS(mlp_forward(w, x), std::invalid_argument);

    w.layers[1].weight = Eigen::MatrixXd::Zero(2, 7);  // breaks the chain
    w.layers[1].bias = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);

    MlpWeights bad_bias = init_mlp({3, 2}, {Activation::identity}, 1);
    bad_bias.layers[0].bias = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(bad_bias.validate(), std::invalid_argument);

    CHECK_THROWS_AS(mlp_forward(MlpWeights{}, x), std::invalid_argument);
}

TEST_CASE("channel max pool") {
    FeatureMatrix x(3, 2);
    x << 1, -5, 4, 0, -2, 3;
    const Eigen::RowVectorXd pooled = channel_max_pool(x);
    CHECK(pooled(0) == 4);
    CHECK(pooled(1) == 3);

    FeatureMatrix shuffled(3, 2);
    shuffled << -2, 3, 1, -5, 4, 0;
    CHECK((channel_max_pool(shuffled) - pooled).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(channel_max_pool(FeatureMatrix(0, 2)), std::invalid_argument);
}

TEST_CASE("smooth l1 values and continuity") {
    CHECK(smooth_l1(0.0, 1.0) == 0.0);
    CHECK(smooth_l1(0.5, 1.0) == doctest::Approx(0.125));
    CHECK(smooth_l1(-0.5, 1.0) == doctest::Approx(0.125));
    CHECK(smooth_l1(2.0, 1.0) == doctest::Approx(1.5));
    CHECK(smooth_l1(1.0, 1.0) == doctest::Approx(0.5));
    CHECK(smooth_l1(0.2, 0.1) == doctest::Approx(0.15));

    // C1 continuity at the kink.
    const double beta = 0.7;
    CHECK(std::abs(smooth_l1(beta - 1e-9, beta) - smooth_l1(beta + 1e-9, beta)) < 1e-8);
    CHECK(std::abs(smooth_l1_grad(beta - 1e-9, beta) - smooth_l1_grad(beta + 1e-9, beta)) < 1e-8);
    CHECK(smooth_l1_grad(beta, beta) == 1.0);
    CHECK(smooth_l1_grad(-beta, beta) == -1.0);
    CHECK(smooth_l1_grad(0.35, 0.7) == doctest::Approx(0.5));
    CHECK(smooth_l1_grad(0.0, 1.0) == 0.0);

    CHECK_THROWS_AS(smooth_l1(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(smooth_l1_grad(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("binary cross entropy values and clamping") {
    CHECK(cross_entropy({0.9}, {1}) == doctest::Approx(-std::log(0.9)));
    CHECK(cross_entropy({0.9}, {0}) == doctest::Approx(-std::log(0.1)));
    CHECK(cross_entropy({0.9, 0.2}, {1, 0})
          == doctest::Approx(0.5 * (-std::log(0.9) - std::log(0.8))));
    CHECK(cross_entropy({}, {}) == 0.0);

    // The clamp bounds the loss at degenerate probabilities.
    CHECK(cross_entropy({0.0}, {1}) == doctest::Approx(-std::log(kProbClamp)));
    CHECK(cross_entropy({1.0}, {0}) == doctest::Approx(-std::log(kProbClamp)));
    CHECK(cross_entropy({1.0}, {1}) == doctest::Approx(-std::log1p(-kProbClamp)));

    CHECK_THROWS_AS(cross_entropy({0.5}, {1, 0}), std::invalid_argument);
}

TEST_CASE("cross entropy gradient") {
    const std::vector<double> probs = {0.3, 0.8, 0.5};
    const std::vector<std::uint8_t> labels = {1, 0, 1};
    const auto grad = cross_entropy_grad(probs, labels);
    REQUIRE(grad.size() == 3);
    CHECK(grad[0] == doctest::Approx((0.3 - 1.0) / (0.3 * 0.7) / 3.0));
    CHECK(grad[1] == doctest::Approx(0.8 / (0.8 * 0.2) / 3.0));
    CHECK(grad[2] == doctest::Approx((0.5 - 1.0) / (0.5 * 0.5) / 3.0));

    // Saturated clamp: locally constant, so the gradient is zero.
    const auto sat = cross_entropy_grad({0.0, 1.0}, {1, 1});
    CHECK(sat[0] == 0.0);
    CHECK(sat[1] == 0.0);

    // Central-difference agreement away from the clamp.
    Eigen::VectorXd p(3);
    p << 0.3, 0.8, 0.5;
    Eigen::VectorXd analytic(3);
    for (int i = 0; i < 3; ++i) analytic(i) = grad[i];
    const auto f = [&](const Eigen::VectorXd& q) {
        return cross_entropy({q(0), q(1), q(2)}, labels);
    };
    CHECK(grad_check(f, p, analytic, 1e-6) < 1e-6);
}

TEST_CASE("grad check flags wrong gradients") {
    Eigen::MatrixXd a(3, 3);
    a << 2, 1, 0, 1, 3, 1, 0, 1, 2;
    const auto f = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(a * x); };
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    const Eigen::VectorXd g = a * x;

    CHECK(grad_check(f, x, g, 1e-5) < 1e-8);
    CHECK(grad_check(f, x, 2.0 * g, 1e-5) > 0.4);  // doubled gradient is ~0.5 off

    const auto constant = [](const Eigen::VectorXd&) { return 3.0; };
    CHECK(grad_check(constant, x, Eigen::VectorXd::Zero(3), 1e-5) == 0.0);

    CHECK_THROWS_AS(grad_check(f, x, Eigen::VectorXd::Zero(2), 1e-5), std::invalid_argument);
    CHECK_THROWS_AS(grad_check(f, x, g, 0.0), std::invalid_argument);
}

TEST_CASE("weight initialization is deterministic and bounded") {
    const Eigen::MatrixXd a = init_weights(6, 4, 11, 1);
    const Eigen::MatrixXd b = init_weights(6, 4, 11, 1);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    CHECK((init_weights(6, 4, 11, 2) - a).cwiseAbs().maxCoeff() > 0.0);
    CHECK((init_weights(6, 4, 12, 1) - a).cwiseAbs().maxCoeff() > 0.0);

    const double bound = std::sqrt(6.0 / (6 + 4));
    CHECK(a.cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("mlp initialization shapes") {
    const MlpWeights w =
        init_mlp({3, 8, 1}, {Activation::relu, Activation::sigmoid}, 5, 2);
    REQUIRE(w.layers.size() == 2);
    CHECK(w.in_width() == 3);
    CHECK(w.out_width() == 1);
    CHECK(w.layers[0].weight.rows() == 8);
    CHECK(w.layers[0].weight.cols() == 3);
    CHECK(w.layers[0].bias.cwiseAbs().maxCoeff() == 0.0);
    CHECK(w.layers[1].act == Activation::sigmoid);
    CHECK_NOTHROW(w.validate());

    CHECK_THROWS_AS(init_mlp({3}, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_mlp({3, 2}, {Activation::relu, Activation::relu}, 1),
                    std::invalid_argument);
}

TEST_CASE("identity mlp passes input through") {
    const MlpWeights id = identity_mlp(4);
    FeatureMatrix x = init_weights(3, 4, 21);
    CHECK((mlp_forward(id, x) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("softmax rows") {
    FeatureMatrix logits(2, 3);
    logits << 0, 0, 0, 1000, 1000, 1001;  // large values must not overflow
    const FeatureMatrix p = softmax_rows(logits);
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(p.row(0).sum() == doctest::Approx(1.0));
    CHECK(p.row(1).sum() == doctest::Approx(1.0));
    CHECK(p(1, 2) > p(1, 0));

    // Shifting a row by a constant leaves the softmax unchanged.
    FeatureMatrix shifted(1, 3);
    shifted << 1, 2, 3;
    FeatureMatrix base(1, 3);
    base << -1, 0, 1;
    CHECK((softmax_rows(shifted) - softmax_rows(base)).cwiseAbs().maxCoeff() < 1e-15);
}
