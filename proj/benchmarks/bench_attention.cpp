#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "sbmc/attention.hpp"
#include "sbmc/nn.hpp"

namespace {

void bm_cgnl(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int c = 64;
  const int ct = 32;
  sbmc::CgnlWeights w;
  w.theta = sbmc::init_weights(ct, c, 31, 1);
  w.phi = sbmc::init_weights(ct, c, 31, 2);
  w.g = sbmc::init_weights(ct, c, 31, 3);
  w.out = sbmc::init_weights(c, ct, 31, 4);
  w.scale = 1.0 / ct;
  const Eigen::MatrixXd input = sbmc::init_weights(n, c, 32, 1);
  for (auto _ : state) {
    Eigen::MatrixXd out = sbmc::cgnl(input, w, 1);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(n);
}

void bm_cgnl_grouped(benchmark::State& state) {
  const int n = 1024;
  const int c = 64;
  const int ct = 32;
  const int groups = static_cast<int>(state.range(0));
  sbmc::CgnlWeights w;
  w.theta = sbmc::init_weights(ct, c, 41, 1);
  w.phi = sbmc::init_weights(ct, c, 41, 2);
  w.g = sbmc::init_weights(ct, c, 41, 3);
  w.out = sbmc::init_weights(c, ct, 41, 4);
  w.scale = 1.0 / ct;
  const Eigen::MatrixXd input = sbmc::init_weights(n, c, 42, 1);
  for (auto _ : state) {
    Eigen::MatrixXd out = sbmc::cgnl(input, w, groups);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(bm_cgnl)->RangeMultiplier(2)->Range(256, 8192)->Complexity();
BENCHMARK(bm_cgnl_grouped)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Arg(32);
