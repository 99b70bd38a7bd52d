// benchmarks/codebook_bench.cc

// Copyright 2026 The vpc Authors.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "vpc/codebook/codebook.h"
#include "vpc/codebook/kmeans.h"
#include "vpc/numerics/rng.h"

namespace vpc {
namespace {

Matrix Points(Index n, Index dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, dim);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
  return m;
}

void BM_HardAssign(benchmark::State& state) {
  const Matrix x = Points(state.range(0), 8, 1);
  const Codebook cb = RandomCodebook(state.range(1), 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(HardAssign(x, cb));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HardAssign)->Args({10000, 8})->Args({10000, 100});

void BM_SoftPosterior(benchmark::State& state) {
  const Matrix x = Points(state.range(0), 8, 1);
  const Codebook cb = RandomCodebook(state.range(1), 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(SoftPosterior(x, cb, 1.0).probs.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SoftPosterior)->Args({10000, 8})->Args({10000, 100});

void BM_FitKmeans(benchmark::State& state) {
  const Matrix x = Points(state.range(0), 8, 1);
  const Codebook init = KmeansPlusPlusInit(x, 8, 3);
  KmeansOptions opt;
  opt.max_iters = 20;
  for (auto _ : state) benchmark::DoNotOptimize(FitKmeans(x, init, opt).distortion);
}
BENCHMARK(BM_FitKmeans)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace vpc
