#include "sbmc/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace sbmc {

void ForegroundScores::validate(int n_points) const {
    if (static_cast<int>(scores.size()) != n_points)
        throw std::invalid_argument("score count does not match point count");
    for (double s : scores)
        if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("score outside [0,1]");
}

namespace {

/// FPS over an index subset, kept in ascending index order. The start point is
/// the subset's lowest index so that a full-cloud subset reduces to plain fps.
std::vector<int> fps_subset(const PointCloud& cloud, const std::vector<int>& subset, int m) {
    std::vector<int> picked;
    if (m == 0) return picked;
    picked.reserve(m);
    const int n = static_cast<int>(subset.size());

    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    std::vector<char> taken(n, 0);
    int next = 0;  // position within subset
    for (int step = 0; step < m; ++step) {
        const int chosen = subset[next];
        picked.push_back(chosen);
        taken[next] = 1;
        const Point3& p = cloud.positions[chosen];
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < n; ++i) {
            const double d2 = squared_distance(cloud.positions[subset[i]], p);
            if (d2 < min_d2[i]) min_d2[i] = d2;
            if (!taken[i] && min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        next = best;
    }
    return picked;
}

}  // namespace

std::vector<int> fps(const PointCloud& cloud, int m) {
    const int n = cloud.size();
    if (m < 1 || m > n) throw std::invalid_argument("fps: m must be in [1, N]");
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    return fps_subset(cloud, all, m);
}

ForegroundScores oracle_foreground_scores(const PointCloud& cloud,
                                          const std::vector<AABox>& boxes) {
    ForegroundScores fg;
    fg.scores.resize(cloud.positions.size(), 0.0);
    for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
        for (const auto& b : boxes) {
            if (b.contains(cloud.positions[i])) {
                fg.scores[i] = 1.0;
                break;
            }
        }
    }
    return fg;
}

SplitSample split_by_score(const ForegroundScores& scores, int kappa) {
    const int n = static_cast<int>(scores.scores.size());
    if (kappa < 0 || kappa > n) throw std::invalid_argument("split_by_score: kappa out of range");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores.scores[a] > scores.scores[b];
    });
    SplitSample split;
    split.kappa = kappa;
    split.foreground_indices.assign(order.begin(), order.begin() + kappa);
    split.background_indices.assign(order.begin() + kappa, order.end());
    std::sort(split.foreground_indices.begin(), split.foreground_indices.end());
    std::sort(split.background_indices.begin(), split.background_indices.end());
    return split;
}

std::vector<int> fbs(const PointCloud& cloud, const ForegroundScores& scores, int m, int kappa,
                     int m_fore) {
    const int n = cloud.size();
    scores.validate(n);
    if (m < 1 || m > n) throw std::invalid_argument("fbs: m must be in [1, N]");
    if (kappa < 0 || kappa > n) throw std::invalid_argument("fbs: kappa out of range");
    if (m_fore < 0 || m_fore > std::min(m, kappa))
        throw std::invalid_argument("fbs: m_fore must be in [0, min(m, kappa)]");
    if (m - m_fore > n - kappa)
        throw std::invalid_argument("fbs: background set too small for m - m_fore samples");

    const SplitSample split = split_by_score(scores, kappa);
    std::vector<int> result = fps_subset(cloud, split.foreground_indices, m_fore);
    const std::vector<int> bg = fps_subset(cloud, split.background_indices, m - m_fore);
    result.insert(result.end(), bg.begin(), bg.end());
    return result;
}

}  // namespace sbmc
