#include <doctest.h>

#include "sbmc/losses.hpp"
#include "sbmc/nn.hpp"
#include "sbmc/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace sbmc;

namespace {

FeatureMatrix to_matrix(const Eigen::VectorXd& v, int rows, int cols) {
    FeatureMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
    }
    return m;
}

Eigen::VectorXd flatten(const FeatureMatrix& m) {
    Eigen::VectorXd v(m.rows() * m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
    }
    return v;
}

// Offsets with every component at least 0.3 in magnitude keep both norms away
// from their kinks during finite differencing.
FeatureMatrix safe_offsets(int rows, CounterRng& rng) {
    FeatureMatrix m(rows, 3);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double mag = rng.uniform(0.3, 1.0);
            m(i, j) = rng.next_below(2) ? mag : -mag;
        }
    }
    return m;
}

}  // namespace

TEST_CASE("vote regression averages offset norms over on-object seeds") {
    FeatureMatrix pred(3, 3);
    pred << 3, 4, 0, 9, 9, 9, 0, 0, 0;
    FeatureMatrix gt(3, 3);
    gt << 0, 0, 0, 0, 0, 0, 0, 0, 2;
    const std::vector<std::uint8_t> mask = {1, 0, 1};

    const LossTerm l2 = vote_reg_loss(pred, gt, mask, VoteNorm::l2);
    CHECK(l2.value == doctest::Approx(3.5));  // (5 + 2) / 2
    CHECK_FALSE(l2.empty_set);

    const LossTerm l1 = vote_reg_loss(pred, gt, mask, VoteNorm::l1);
    CHECK(l1.value == doctest::Approx(4.5));  // (7 + 2) / 2

    const LossTerm empty = vote_reg_loss(pred, gt, {0, 0, 0});
    CHECK(empty.value == 0.0);
    CHECK(empty.empty_set);

    CHECK_THROWS_AS(vote_reg_loss(pred, gt.topRows(2), mask), std::invalid_argument);
    CHECK_THROWS_AS(vote_reg_loss(pred, gt, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(vote_reg_loss(pred.leftCols(2), gt.leftCols(2), mask),
                    std::invalid_argument);
}

TEST_CASE("vote regression gradient matches central differences") {
    CounterRng rng(81);
    for (const VoteNorm norm : {VoteNorm::l2, VoteNorm::l1}) {
        for (int trial = 0; trial < 10; ++trial) {
            const int rows = 4;
            const FeatureMatrix gt = safe_offsets(rows, rng);
            const FeatureMatrix pred = gt + safe_offsets(rows, rng);
            std::vector<std::uint8_t> mask(rows);
            for (auto& f : mask) f = rng.next_below(2) ? 1 : 0;
            mask[0] = 1;

            const auto f = [&](const Eigen::VectorXd& params) {
                return vote_reg_loss(to_matrix(params, rows, 3), gt, mask, norm).value;
            };
            const Eigen::VectorXd analytic = flatten(vote_reg_grad(pred, gt, mask, norm));
            CHECK(grad_check(f, flatten(pred), analytic, 1e-5) < 1e-4);
        }
    }

    // Off-object rows and the l2 kink at zero offset produce zero gradients.
    FeatureMatrix pred(2, 3);
    pred << 1, 1, 1, 5, 5, 5;
    const FeatureMatrix grad = vote_reg_grad(pred, pred, {1, 0});
    CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scale regression is a mean smooth l1 with matching gradient") {
    const std::vector<double> pred = {1.0, 5.0, 2.0};
    const std::vector<double> gt = {1.2, 3.0, 2.0};

    const LossTerm two = scale_reg_loss(pred, gt, {1, 1, 0}, 0.5);
    CHECK(two.value == doctest::Approx(0.5 * (0.04 + 1.75)));
    const LossTerm three = scale_reg_loss(pred, gt, {1, 1, 1}, 0.5);
    CHECK(three.value == doctest::Approx((0.04 + 1.75) / 3.0));

    const auto grad = scale_reg_grad(pred, gt, {1, 1, 0}, 0.5);
    CHECK(grad[0] == doctest::Approx(-0.2));  // (-0.2 / 0.5) / 2
    CHECK(grad[1] == doctest::Approx(0.5));   // sign branch / 2
    CHECK(grad[2] == 0.0);

    const LossTerm empty = scale_reg_loss(pred, gt, {0, 0, 0});
    CHECK(empty.value == 0.0);
    CHECK(empty.empty_set);
    const auto zero_grad = scale_reg_grad(pred, gt, {0, 0, 0});
    for (double g : zero_grad) CHECK(g == 0.0);

    CHECK_THROWS_AS(scale_reg_loss(pred, {1.0}, {1, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(scale_reg_loss(pred, gt, {1, 1}), std::invalid_argument);

    CounterRng rng(82);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> p(4), g(4);
        std::vector<std::uint8_t> flags(4);
        for (int i = 0; i < 4; ++i) {
            g[i] = rng.uniform(0.5, 2.0);
            const double mag = rng.uniform(0.2, 0.7);
            p[i] = g[i] + (rng.next_below(2) ? mag : -mag);
            flags[i] = rng.next_below(2) ? 1 : 0;
        }
        flags[0] = 1;
        const auto f = [&](const Eigen::VectorXd& params) {
            std::vector<double> scaled(params.data(), params.data() + params.size());
            return scale_reg_loss(scaled, g, flags).value;
        };
        Eigen::VectorXd params(4);
        for (int i = 0; i < 4; ++i) params(i) = p[i];
        const auto analytic_vec = scale_reg_grad(p, g, flags);
        Eigen::VectorXd analytic(4);
        for (int i = 0; i < 4; ++i) analytic(i) = analytic_vec[i];
        CHECK(grad_check(f, params, analytic, 1e-5) < 1e-4);
    }
}

TEST_CASE("ray grouping loss composes scale and mask terms") {
    const std::vector<double> coarse_probs = {0.9, 0.2};
    const std::vector<std::uint8_t> coarse_labels = {1, 0};
    const std::vector<double> fine_probs = {0.7};
    const std::vector<std::uint8_t> fine_labels = {1};
    const std::vector<double> pred_scales = {2.0};
    const std::vector<double> gt_scales = {1.5};

    LossWeights w;
    w.lambda_scale_reg = 2.0;
    w.lambda_c_cls = 3.0;
    w.lambda_f_cls = 0.5;

    const double ce_c = 0.5 * (-std::log(0.9) - std::log(0.8));
    const double ce_f = -std::log(0.7);

    const LossTerm on = rbfg_loss(coarse_probs, coarse_labels, fine_probs, fine_labels,
                                  pred_scales, gt_scales, {1}, w);
    CHECK(on.value == doctest::Approx(2.0 * 0.125 + 3.0 * ce_c + 0.5 * ce_f));
    CHECK_FALSE(on.empty_set);

    // Without positives the scale term drops out and flags the empty set.
    const LossTerm off = rbfg_loss(coarse_probs, coarse_labels, fine_probs, fine_labels,
                                   pred_scales, gt_scales, {0}, w);
    CHECK(off.value == doctest::Approx(3.0 * ce_c + 0.5 * ce_f));
    CHECK(off.empty_set);

    LossWeights bad = w;
    bad.lambda_c_cls = -1.0;
    CHECK_THROWS_AS(rbfg_loss(coarse_probs, coarse_labels, fine_probs, fine_labels,
                              pred_scales, gt_scales, {1}, bad),
                    std::invalid_argument);
}

TEST_CASE("box loss sums six smooth-l1 components per positive cluster") {
    FeatureMatrix pc(2, 3), ps(2, 3), gc(2, 3), gs(2, 3);
    pc << 0.1, -0.2, 0.3, 100, 100, 100;
    ps << 1.5, 0.0, -0.5, 100, 100, 100;
    gc.setZero();
    gs.setZero();

    const LossTerm one = box_loss(pc, ps, gc, gs, {1, 0});
    CHECK(one.value == doctest::Approx(0.005 + 0.02 + 0.045 + 1.0 + 0.0 + 0.125));

    const LossTerm same = box_loss(gc, gs, gc, gs, {1, 1});
    CHECK(same.value == 0.0);
    CHECK_FALSE(same.empty_set);

    const LossTerm empty = box_loss(pc, ps, gc, gs, {0, 0});
    CHECK(empty.value == 0.0);
    CHECK(empty.empty_set);

    // Averaging runs over positives, not all clusters.
    gc.row(1) = pc.row(1);
    gs.row(1) = ps.row(1);
    const LossTerm both = box_loss(pc, ps, gc, gs, {1, 1});
    CHECK(both.value == doctest::Approx(one.value / 2.0));

    CHECK_THROWS_AS(box_loss(pc, ps.topRows(1), gc, gs, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(box_loss(pc, ps, gc, gs, {1}), std::invalid_argument);
}

TEST_CASE("semantic class loss reads the labeled probability") {
    FeatureMatrix probs(2, 3);
    probs << 0.2, 0.5, 0.3, 0.1, 0.1, 0.8;

    const LossTerm both = sem_cls_loss(probs, {1, 2}, {1, 1});
    CHECK(both.value == doctest::Approx(0.5 * (-std::log(0.5) - std::log(0.8))));

    const LossTerm first = sem_cls_loss(probs, {1, 2}, {1, 0});
    CHECK(first.value == doctest::Approx(-std::log(0.5)));

    FeatureMatrix hard(2, 2);
    hard << 0.0, 1.0, 1.0, 0.0;
    const LossTerm clamped = sem_cls_loss(hard, {0, 0}, {1, 1});
    CHECK(clamped.value
          == doctest::Approx(0.5 * (-std::log(kProbClamp) - std::log(1.0 - kProbClamp))));

    const LossTerm empty = sem_cls_loss(probs, {1, 2}, {0, 0});
    CHECK(empty.value == 0.0);
    CHECK(empty.empty_set);

    CHECK_THROWS_AS(sem_cls_loss(probs, {1, 3}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(sem_cls_loss(probs, {-1, 2}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(sem_cls_loss(probs, {1}, {1, 1}), std::invalid_argument);
}

TEST_CASE("semantic class gradient is confined to labeled entries") {
    FeatureMatrix probs(3, 3);
    probs << 0.2, 0.5, 0.3, 0.1, 0.1, 0.8, 0.6, 0.3, 0.1;
    const std::vector<int> labels = {1, 2, 0};
    const std::vector<std::uint8_t> positive = {1, 1, 0};

    const FeatureMatrix grad = sem_cls_grad(probs, labels, positive);
    CHECK(grad(0, 1) == doctest::Approx(-1.0 / (0.5 * 2)));
    CHECK(grad(1, 2) == doctest::Approx(-1.0 / (0.8 * 2)));
    CHECK(grad(0, 0) == 0.0);
    CHECK(grad(0, 2) == 0.0);
    CHECK(grad(2, 0) == 0.0);  // off-positive row

    // Saturated probabilities have zero gradient in both directions.
    FeatureMatrix hard(2, 2);
    hard << 1.0, 0.0, 0.0, 1.0;
    CHECK(sem_cls_grad(hard, {0, 0}, {1, 1}).cwiseAbs().maxCoeff() == 0.0);

    const auto f = [&](const Eigen::VectorXd& params) {
        return sem_cls_loss(to_matrix(params, 3, 3), labels, positive).value;
    };
    CHECK(grad_check(f, flatten(probs), flatten(grad), 1e-6) < 1e-4);
}

TEST_CASE("rows outside the supervised set cannot change loss values") {
    CounterRng rng(83);
    FeatureMatrix pred = safe_offsets(4, rng);
    const FeatureMatrix gt = safe_offsets(4, rng);
    const std::vector<std::uint8_t> mask = {1, 0, 1, 0};

    const double base = vote_reg_loss(pred, gt, mask).value;
    pred.row(1).setConstant(1e9);
    pred.row(3).setConstant(-1e9);
    CHECK(vote_reg_loss(pred, gt, mask).value == base);

    FeatureMatrix probs(2, 2);
    probs << 0.3, 0.7, 0.6, 0.4;
    const double cls_base = sem_cls_loss(probs, {1, 0}, {1, 0}).value;
    probs.row(1).setConstant(0.123);
    CHECK(sem_cls_loss(probs, {1, 0}, {1, 0}).value == cls_base);
}

TEST_CASE("overall loss is the weighted sum of components") {
    LossComponents c;
    c.vote_reg = 1.0;
    c.fbs = 2.0;
    c.rbfg = 3.0;
    c.obj_cls = 4.0;
    c.box = 5.0;
    c.sem_cls = 6.0;

    LossWeights w;
    w.lambda_vote_reg = 0.5;
    w.lambda_fbs = 2.0;
    w.lambda_rbfg = 1.0;
    w.lambda_obj_cls = 0.0;
    w.lambda_box = 0.25;
    w.lambda_sem_cls = 3.0;
    CHECK(overall_loss(c, w) == doctest::Approx(0.5 + 4.0 + 3.0 + 0.0 + 1.25 + 18.0));

    LossWeights zero;
    zero.lambda_vote_reg = 0.0;
    zero.lambda_fbs = 0.0;
    zero.lambda_rbfg = 0.0;
    zero.lambda_obj_cls = 0.0;
    zero.lambda_box = 0.0;
    zero.lambda_sem_cls = 0.0;
    CHECK(overall_loss(c, zero) == 0.0);

    LossWeights bad;
    bad.lambda_box = -0.1;
    CHECK_THROWS_AS(overall_loss(c, bad), std::invalid_argument);
    bad = LossWeights{};
    bad.lambda_fbs = std::nan("");
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
