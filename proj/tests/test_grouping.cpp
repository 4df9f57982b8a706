#include <doctest.h>

#include "sbmc/grouping.hpp"
#include "sbmc/rng.hpp"

#include <algorithm>
#include <set>
#include <vector>

using namespace sbmc;

namespace {

PointCloud random_cloud(int n, int channels, std::uint64_t seed) {
    CounterRng rng(seed);
    PointCloud c;
    c.positions.reserve(n);
    for (int i = 0; i < n; ++i) {
        c.positions.push_back({rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)});
    }
    c.features.resize(n, channels);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < channels; ++j) c.features(i, j) = rng.next_unit();
    }
    return c;
}

std::vector<int> brute_query(const PointCloud& cloud, const Point3& center, double radius,
                             int max_group) {
    std::vector<std::pair<double, int>> hits;
    for (int i = 0; i < cloud.size(); ++i) {
        const double d2 = squared_distance(cloud.positions[i], center);
        if (d2 <= radius * radius) hits.emplace_back(d2, i);
    }
    std::sort(hits.begin(), hits.end());
    if (max_group >= 0 && static_cast<int>(hits.size()) > max_group) hits.resize(max_group);
    std::vector<int> out;
    for (auto& [d2, i] : hits) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("ball query agrees with a brute-force scan") {
    const PointCloud cloud = random_cloud(200, 0, 17);
    CounterRng rng(18);
    std::vector<Point3> centers;
    for (int i = 0; i < 20; ++i) {
        centers.push_back({rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)});
    }
    for (double radius : {0.15, 0.35, 0.8}) {
        const auto groups = ball_query(cloud, centers, radius, -1);
        const auto truncated = ball_query(cloud, centers, radius, 3);
        REQUIRE(groups.size() == centers.size());
        for (std::size_t c = 0; c < centers.size(); ++c) {
            CHECK(groups[c] == brute_query(cloud, centers[c], radius, -1));
            CHECK(truncated[c] == brute_query(cloud, centers[c], radius, 3));
        }
    }
}

TEST_CASE("ball query boundary is inclusive and results are nearest first") {
    PointCloud cloud;
    cloud.positions = {{0.3, 0, 0}, {0.2, 0, 0}, {0.300001, 0, 0}, {0, 0, 0}};
    cloud.features.resize(4, 0);
    const auto groups = ball_query(cloud, {{0, 0, 0}}, 0.3, -1);
    CHECK(groups[0] == std::vector<int>{3, 1, 0});  // exact-radius point included

    // Distance tie between indices 0 and 1 resolves to the lower index.
    PointCloud tie;
    tie.positions = {{0.1, 0, 0}, {-0.1, 0, 0}};
    tie.features.resize(2, 0);
    CHECK(ball_query(tie, {{0, 0, 0}}, 0.2, -1)[0] == std::vector<int>{0, 1});
}

TEST_CASE("grid rejects queries wider than its cells") {
    std::vector<Point3> pts = {{0, 0, 0}};
    const UniformGrid grid(pts, 0.5);
    CHECK_THROWS_AS(grid.query({0, 0, 0}, 0.6, -1), std::invalid_argument);
    CHECK_THROWS_AS(UniformGrid(pts, 0.0), std::invalid_argument);
}

TEST_CASE("local abstraction pools member rows through the mlp") {
    PointCloud cloud;
    cloud.positions = {{1, 0, 0}, {0, 1, 0}};
    cloud.features.resize(2, 1);
    cloud.features << 5.0, 7.0;

    // Identity over [rel_x, rel_y, rel_z, f] keeps relative coordinates.
    const MlpWeights id = identity_mlp(4);
    const FeatureMatrix out = local_abstraction(cloud, {{0, 0, 0}, {9, 9, 9}}, 1.5, -1, id);
    REQUIRE(out.rows() == 2);
    REQUIRE(out.cols() == 4);
    // Max over rows (1,0,0,5) and (0,1,0,7).
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 1.0);
    CHECK(out(0, 2) == 0.0);
    CHECK(out(0, 3) == 7.0);
    // Empty group pools to zero.
    CHECK(out.row(1).cwiseAbs().maxCoeff() == 0.0);

    const MlpWeights narrow = identity_mlp(3);
    CHECK_THROWS_AS(local_abstraction(cloud, {{0, 0, 0}}, 1.0, -1, narrow),
                    std::invalid_argument);
}

TEST_CASE("set abstraction centers on cloud points") {
    const PointCloud cloud = random_cloud(30, 2, 23);
    const MlpWeights mlp = init_mlp({5, 6}, {Activation::relu}, 4);
    const std::vector<int> samples = {4, 0, 17};
    const SeedSet seeds = set_abstraction(cloud, samples, 0.4, 8, mlp);
    REQUIRE(seeds.size() == 3);
    CHECK(seeds.positions[0] == cloud.positions[4]);
    CHECK(seeds.positions[2] == cloud.positions[17]);
    const FeatureMatrix direct =
        local_abstraction(cloud, seeds.positions, 0.4, 8, mlp);
    CHECK((seeds.features - direct).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(set_abstraction(cloud, {30}, 0.4, 8, mlp), std::invalid_argument);
    CHECK_THROWS_AS(set_abstraction(cloud, {-1}, 0.4, 8, mlp), std::invalid_argument);
}

TEST_CASE("set abstraction output is invariant to input relabeling") {
    const PointCloud cloud = random_cloud(25, 2, 31);
    PointCloud reversed;
    reversed.positions.assign(cloud.positions.rbegin(), cloud.positions.rend());
    reversed.features = cloud.features.colwise().reverse();

    const MlpWeights mlp = init_mlp({5, 4}, {Activation::relu}, 6);
    const SeedSet a = set_abstraction(cloud, {3, 11}, 0.5, -1, mlp);
    const SeedSet b = set_abstraction(reversed, {24 - 3, 24 - 11}, 0.5, -1, mlp);
    CHECK((a.features - b.features).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature propagation interpolates by inverse distance") {
    SeedSet coarse;
    coarse.positions = {{0, 0, 0}, {2, 0, 0}};
    coarse.features.resize(2, 2);
    coarse.features << 1.0, 10.0, 3.0, 30.0;

    // Midpoint averages the two sources.
    const FeatureMatrix mid = propagate_features(coarse, {{1, 0, 0}}, 2);
    CHECK(mid(0, 0) == doctest::Approx(2.0));
    CHECK(mid(0, 1) == doctest::Approx(20.0));

    // A coincident target copies the source row exactly.
    const FeatureMatrix exact = propagate_features(coarse, {{2, 0, 0}}, 2);
    CHECK(exact(0, 0) == 3.0);
    CHECK(exact(0, 1) == 30.0);

    // Asymmetric target: weights follow 1/d.
    const FeatureMatrix near = propagate_features(coarse, {{0.5, 0, 0}}, 2);
    const double w0 = 1.0 / (0.5 + 1e-8);
    const double w1 = 1.0 / (1.5 + 1e-8);
    CHECK(near(0, 0) == doctest::Approx((w0 * 1.0 + w1 * 3.0) / (w0 + w1)));

    // k=1 snaps to the nearest source.
    const FeatureMatrix nn = propagate_features(coarse, {{0.9, 0, 0}}, 1);
    CHECK(nn(0, 0) == doctest::Approx(1.0));

    CHECK_THROWS_AS(propagate_features(SeedSet{}, {{0, 0, 0}}, 2), std::invalid_argument);
    CHECK_THROWS_AS(propagate_features(coarse, {{0, 0, 0}}, 0), std::invalid_argument);
}

TEST_CASE("apply votes shifts positions and features") {
    SeedSet seeds;
    seeds.positions = {{0, 0, 0}, {1, 1, 1}};
    seeds.features.resize(2, 2);
    seeds.features << 1, 2, 3, 4;

    FeatureMatrix dxyz(2, 3);
    dxyz << 0.5, 0, 0, 0, -1, 0;
    FeatureMatrix dfeat(2, 2);
    dfeat << 10, 10, -1, -2;

    const VoteSet votes = apply_votes(seeds, dxyz, dfeat);
    CHECK(votes.positions[0] == Point3{0.5, 0, 0});
    CHECK(votes.positions[1] == Point3{1, 0, 1});
    CHECK(votes.features(0, 0) == 11);
    CHECK(votes.features(1, 1) == 2);
    CHECK(votes.source_seed == std::vector<int>{0, 1});

    const VoteSet still =
        apply_votes(seeds, FeatureMatrix::Zero(2, 3), FeatureMatrix::Zero(2, 2));
    CHECK(still.positions[0] == seeds.positions[0]);
    CHECK((still.features - seeds.features).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(apply_votes(seeds, FeatureMatrix::Zero(2, 2), dfeat),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_votes(seeds, dxyz, FeatureMatrix::Zero(2, 3)),
                    std::invalid_argument);
}

TEST_CASE("vote clustering separates distant blobs") {
    VoteSet votes;
    votes.positions = {{0, 0, 0}, {0.1, 0, 0}, {0.2, 0, 0}, {5, 0, 0}, {5.1, 0, 0}};
    votes.features.resize(5, 1);
    votes.features << 1, 2, 3, 10, 20;
    votes.source_seed = {0, 1, 2, 3, 4};

    const ClusterSet clusters = cluster_votes(votes, 2, 0.5);
    REQUIRE(clusters.size() == 2);
    CHECK(clusters.centers[0] == votes.positions[0]);  // fps starts at 0
    CHECK(clusters.centers[1] == votes.positions[4]);  // farthest vote
    CHECK(clusters.member_votes[0] == std::vector<int>{0, 1, 2});
    CHECK(clusters.member_votes[1] == std::vector<int>{4, 3});
    CHECK(clusters.features(0, 0) == 3.0);   // channel max within the blob
    CHECK(clusters.features(1, 0) == 20.0);
    CHECK(clusters.center_vote == std::vector<int>{0, 4});

    // A tiny radius keeps only the center vote itself.
    const ClusterSet lone = cluster_votes(votes, 2, 1e-3);
    CHECK(lone.member_votes[0] == std::vector<int>{0});
    CHECK(lone.features(0, 0) == 1.0);

    // Member features optionally pass through an mlp before pooling.
    MlpWeights doubler = identity_mlp(1);
    doubler.layers[0].weight(0, 0) = 2.0;
    const ClusterSet scaled = cluster_votes(votes, 2, 0.5, &doubler);
    CHECK(scaled.features(0, 0) == 6.0);

    CHECK_THROWS_AS(cluster_votes(votes, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(cluster_votes(votes, 6, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(cluster_votes(VoteSet{}, 1, 0.5), std::invalid_argument);
}
