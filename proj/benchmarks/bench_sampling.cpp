#include <benchmark/benchmark.h>

#include "sbmc/rng.hpp"
#include "sbmc/sampling.hpp"
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

void bm_fps(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto cloud = random_cloud(n, 11);
  const int m = n / 2;
  for (auto _ : state) {
    auto picked = sbmc::fps(cloud, m);
    benchmark::DoNotOptimize(picked);
  }
  state.SetComplexityN(n);
}

void bm_fbs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto cloud = random_cloud(n, 12);
  sbmc::CounterRng rng(13);
  sbmc::ForegroundScores scores;
  scores.scores.resize(n);
  for (int i = 0; i < n; ++i) scores.scores[i] = rng.next_unit();
  const int m = n / 2;
  for (auto _ : state) {
    auto picked = sbmc::fbs(cloud, scores, m, n / 2, m / 2);
    benchmark::DoNotOptimize(picked);
  }
  state.SetComplexityN(n);
}

}  // namespace

BENCHMARK(bm_fps)->RangeMultiplier(2)->Range(256, 4096)->Complexity();
BENCHMARK(bm_fbs)->RangeMultiplier(2)->Range(256, 4096)->Complexity();
