#include "sbmc/grouping.hpp"

#include "sbmc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

namespace sbmc {
namespace {

constexpr std::int64_t kCellBias = 1 << 20;  // grid coordinates must fit 21 bits

std::uint64_t pack_cell(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
    const std::int64_t bx = ix + kCellBias;
    const std::int64_t by = iy + kCellBias;
    const std::int64_t bz = iz + kCellBias;
    if (bx < 0 || bx >= (1 << 21) || by < 0 || by >= (1 << 21) || bz < 0 || bz >= (1 << 21)) {
        throw std::invalid_argument("grid cell coordinate out of range");
    }
    return (static_cast<std::uint64_t>(bx) << 42) | (static_cast<std::uint64_t>(by) << 21)
           | static_cast<std::uint64_t>(bz);
}

}  // namespace

UniformGrid::UniformGrid(const std::vector<Point3>& points, double cell_size)
    : points_(points), cell_(cell_size), inv_cell_(1.0 / cell_size) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
        throw std::invalid_argument("grid cell size must be positive and finite");
    }
    cells_.reserve(points.size());
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
        cells_.emplace_back(key_of(points[i]), i);
    }
    std::sort(cells_.begin(), cells_.end());
}

std::uint64_t UniformGrid::key_of(const Point3& p) const {
    return pack_cell(static_cast<std::int64_t>(std::floor(p.x * inv_cell_)),
                     static_cast<std::int64_t>(std::floor(p.y * inv_cell_)),
                     static_cast<std::int64_t>(std::floor(p.z * inv_cell_)));
}

std::vector<int> UniformGrid::query(const Point3& q, double radius, int max_group) const {
    if (radius > cell_) {
        throw std::invalid_argument("query radius exceeds grid cell size");
    }
    const double r2 = radius * radius;
    const std::int64_t cx = static_cast<std::int64_t>(std::floor(q.x * inv_cell_));
    const std::int64_t cy = static_cast<std::int64_t>(std::floor(q.y * inv_cell_));
    const std::int64_t cz = static_cast<std::int64_t>(std::floor(q.z * inv_cell_));

    std::vector<std::pair<double, int>> hits;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
            for (std::int64_t dz = -1; dz <= 1; ++dz) {
                const std::uint64_t key = pack_cell(cx + dx, cy + dy, cz + dz);
                auto lo = std::lower_bound(cells_.begin(), cells_.end(),
                                           std::make_pair(key, std::numeric_limits<int>::min()));
                for (; lo != cells_.end() && lo->first == key; ++lo) {
                    const double d2 = squared_distance(points_[lo->second], q);
                    if (d2 <= r2) {
                        hits.emplace_back(d2, lo->second);
                    }
                }
            }
        }
    }
    std::sort(hits.begin(), hits.end());
    if (max_group >= 0 && static_cast<int>(hits.size()) > max_group) {
        hits.resize(max_group);
    }
    std::vector<int> out;
    out.reserve(hits.size());
    for (const auto& [d2, idx] : hits) {
        out.push_back(idx);
    }
    return out;
}

std::vector<std::vector<int>> ball_query(const PointCloud& cloud,
                                         const std::vector<Point3>& centers, double radius,
                                         int max_group) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw std::invalid_argument("ball_query radius must be positive and finite");
    }
    UniformGrid grid(cloud.positions, radius);
    std::vector<std::vector<int>> groups;
    groups.reserve(centers.size());
    for (const Point3& c : centers) {
        groups.push_back(grid.query(c, radius, max_group));
    }
    return groups;
}

FeatureMatrix local_abstraction(const PointCloud& cloud, const std::vector<Point3>& centers,
                                double radius, int max_group, const MlpWeights& mlp) {
    mlp.validate();
    const int c_in = cloud.channels();
    if (mlp.in_width() != 3 + c_in) {
        throw std::invalid_argument("abstraction mlp input width must be 3 + feature channels");
    }
    const auto groups = ball_query(cloud, centers, radius, max_group);

    std::size_t total = 0;
    for (const auto& g : groups) {
        total += g.size();
    }
    // One forward pass over every member row of every group, then a segmented
    // max-pool; much faster than per-group mlp calls.
    Eigen::MatrixXd rows(total, 3 + c_in);
    std::size_t at = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const Point3& c = centers[gi];
        for (int idx : groups[gi]) {
            const Point3 rel = cloud.positions[idx] - c;
            rows(at, 0) = rel.x;
            rows(at, 1) = rel.y;
            rows(at, 2) = rel.z;
            if (c_in > 0) {
                rows.row(at).segment(3, c_in) = cloud.features.row(idx);
            }
            ++at;
        }
    }
    const Eigen::MatrixXd transformed = mlp_forward(mlp, rows);

    const int c_out = mlp.out_width();
    FeatureMatrix pooled = FeatureMatrix::Zero(static_cast<int>(groups.size()), c_out);
    at = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const std::size_t n = groups[gi].size();
        if (n > 0) {
            pooled.row(gi) = transformed.middleRows(at, n).colwise().maxCoeff();
        }
        at += n;
    }
    return pooled;
}

SeedSet set_abstraction(const PointCloud& cloud, const std::vector<int>& sample_indices,
                        double radius, int max_group, const MlpWeights& mlp) {
    SeedSet out;
    out.positions.reserve(sample_indices.size());
    for (int idx : sample_indices) {
        if (idx < 0 || idx >= cloud.size()) {
            throw std::invalid_argument("set_abstraction sample index out of range");
        }
        out.positions.push_back(cloud.positions[idx]);
    }
    out.features = local_abstraction(cloud, out.positions, radius, max_group, mlp);
    return out;
}

FeatureMatrix propagate_features(const SeedSet& coarse, const std::vector<Point3>& targets,
                                 int k) {
    if (coarse.size() == 0) {
        throw std::invalid_argument("propagate_features needs at least one source point");
    }
    if (k < 1) {
        throw std::invalid_argument("propagate_features k must be >= 1");
    }
    const int m = coarse.size();
    const int kk = std::min(k, m);
    const int c = static_cast<int>(coarse.features.cols());
    FeatureMatrix out(static_cast<int>(targets.size()), c);

    std::vector<std::pair<double, int>> dist(m);
    for (std::size_t t = 0; t < targets.size(); ++t) {
        for (int i = 0; i < m; ++i) {
            dist[i] = {squared_distance(coarse.positions[i], targets[t]), i};
        }
        std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
        if (dist[0].first == 0.0) {
            out.row(t) = coarse.features.row(dist[0].second);
            continue;
        }
        double wsum = 0.0;
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(c);
        for (int j = 0; j < kk; ++j) {
            const double w = 1.0 / (std::sqrt(dist[j].first) + 1e-8);
            wsum += w;
            acc += w * coarse.features.row(dist[j].second);
        }
        out.row(t) = acc / wsum;
    }
    return out;
}

VoteSet apply_votes(const SeedSet& seeds, const FeatureMatrix& offsets_xyz,
                    const FeatureMatrix& offsets_feat) {
    const int m = seeds.size();
    if (offsets_xyz.rows() != m || offsets_xyz.cols() != 3) {
        throw std::invalid_argument("position offsets must be [M x 3]");
    }
    if (offsets_feat.rows() != m || offsets_feat.cols() != seeds.features.cols()) {
        throw std::invalid_argument("feature offsets must match seed features");
    }
    VoteSet out;
    out.positions.reserve(m);
    for (int i = 0; i < m; ++i) {
        out.positions.push_back(seeds.positions[i]
                                + Point3{offsets_xyz(i, 0), offsets_xyz(i, 1), offsets_xyz(i, 2)});
    }
    out.features = seeds.features + offsets_feat;
    out.source_seed.resize(m);
    for (int i = 0; i < m; ++i) {
        out.source_seed[i] = i;
    }
    return out;
}

ClusterSet cluster_votes(const VoteSet& votes, int k, double radius,
                         const MlpWeights* member_mlp) {
    if (votes.size() == 0) {
        throw std::invalid_argument("cluster_votes needs at least one vote");
    }
    if (k < 1 || k > votes.size()) {
        throw std::invalid_argument("cluster count must be in [1, votes]");
    }
    PointCloud as_cloud;
    as_cloud.positions = votes.positions;
    as_cloud.features.resize(votes.size(), 0);
    const std::vector<int> center_idx = fps(as_cloud, k);

    ClusterSet out;
    out.center_vote = center_idx;
    out.centers.reserve(k);
    for (int idx : center_idx) {
        out.centers.push_back(votes.positions[idx]);
    }
    out.member_votes = ball_query(as_cloud, out.centers, radius, -1);

    FeatureMatrix member_feats = votes.features;
    if (member_mlp != nullptr) {
        member_mlp->validate();
        if (member_mlp->in_width() != votes.features.cols()) {
            throw std::invalid_argument("member mlp input width must match vote features");
        }
        member_feats = mlp_forward(*member_mlp, votes.features);
    }
    const int c = static_cast<int>(member_feats.cols());
    out.features = FeatureMatrix::Zero(k, c);
    for (int g = 0; g < k; ++g) {
        const auto& members = out.member_votes[g];
        if (members.empty()) {
            continue;  // cannot happen: the center vote is at distance zero
        }
        Eigen::RowVectorXd acc = member_feats.row(members[0]);
        for (std::size_t j = 1; j < members.size(); ++j) {
            acc = acc.cwiseMax(member_feats.row(members[j]));
        }
        out.features.row(g) = acc;
    }
    return out;
}

}  // namespace sbmc
