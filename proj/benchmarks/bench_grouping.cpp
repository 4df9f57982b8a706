#include <benchmark/benchmark.h>

#include <vector>

#include "sbmc/grouping.hpp"
#include "sbmc/rng.hpp"
#include "sbmc/types.hpp"

namespace {

sbmc::PointCloud random_cloud(int n, uint64_t seed) {
  sbmc::CounterRng rng(seed);
  sbmc::PointCloud cloud;
  cloud.positions.reserve(n);
  for (int i = 0; i < n; ++i) {
    cloud.positions.push_back({rng.next_unit() * 10.0, rng.next_unit() * 10.0,
                               rng.next_unit() * 10.0});
  }
  cloud.features.resize(n, 0);
  return cloud;
}

std::vector<sbmc::Point3> random_centers(int k, uint64_t seed) {
  sbmc::CounterRng rng(seed);
  std::vector<sbmc::Point3> centers;
  centers.reserve(k);
  for (int i = 0; i < k; ++i) {
    centers.push_back({rng.next_unit() * 10.0, rng.next_unit() * 10.0,
                       rng.next_unit() * 10.0});
  }
  return centers;
}

// Reference implementation: scan every point for every center.
std::vector<std::vector<int>> brute_ball_query(const sbmc::PointCloud& cloud,
                                               const std::vector<sbmc::Point3>& centers,
                                               double radius) {
  std::vector<std::vector<int>> groups(centers.size());
  const double r2 = radius * radius;
  for (size_t c = 0; c < centers.size(); ++c) {
    for (size_t i = 0; i < cloud.positions.size(); ++i) {
      if (sbmc::squared_distance(cloud.positions[i], centers[c]) <= r2) {
        groups[c].push_back(static_cast<int>(i));
      }
    }
  }
  return groups;
}

void bm_ball_query_grid(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto cloud = random_cloud(n, 21);
  const auto centers = random_centers(64, 22);
  for (auto _ : state) {
    auto groups = sbmc::ball_query(cloud, centers, 0.4, -1);
    benchmark::DoNotOptimize(groups);
  }
  state.SetComplexityN(n);
}

void bm_ball_query_brute(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto cloud = random_cloud(n, 21);
  const auto centers = random_centers(64, 22);
  for (auto _ : state) {
    auto groups = brute_ball_query(cloud, centers, 0.4);
    benchmark::DoNotOptimize(groups);
  }
  state.SetComplexityN(n);
}

}  // namespace

BENCHMARK(bm_ball_query_grid)->RangeMultiplier(4)->Range(1024, 65536)->Complexity();
BENCHMARK(bm_ball_query_brute)->RangeMultiplier(4)->Range(1024, 65536)->Complexity();
