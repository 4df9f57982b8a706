#pragma once

#include "sbmc/types.hpp"

#include <vector>

namespace sbmc {

/// Per-point foreground scores in [0, 1].
struct ForegroundScores {
    std::vector<double> scores;
    void validate(int n_points) const;
};

/// Top-kappa split of the point indices by descending score.
struct SplitSample {
    std::vector<int> foreground_indices;
    std::vector<int> background_indices;
    int kappa = 0;
};

/// Greedy farthest-point sampling over 3D positions. Starts at index 0 of the
/// given cloud (callers pass canonically sorted clouds), maximises the minimum
/// distance to the selected set, and breaks distance ties by lowest index.
/// Returns indices in selection order.
std::vector<int> fps(const PointCloud& cloud, int m);

/// 1.0 for points inside any box (boundary inclusive), 0.0 otherwise.
ForegroundScores oracle_foreground_scores(const PointCloud& cloud, const std::vector<AABox>& boxes);

/// Rank by (score descending, index ascending); the top kappa indices form the
/// foreground set. Both output sequences are in ascending index order.
SplitSample split_by_score(const ForegroundScores& scores, int kappa);

/// Foreground-biased sampling: farthest-point sampling applied separately to
/// the top-kappa foreground set (m_fore samples) and the background remainder
/// (m - m_fore samples), concatenated foreground first.
std::vector<int> fbs(const PointCloud& cloud, const ForegroundScores& scores, int m, int kappa,
                     int m_fore);

}  // namespace sbmc
