// Copyright 2026 The gradflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cmath>

#include "gradflow/kernels.hpp"
#include "gradflow/noise.hpp"

namespace {

using namespace gradflow;

ParticleMatrix cloud(int J, std::uint64_t step) { return NoiseStream(42).gaussian_matrix(step, J, 2); }

void BM_SvgdDriftSerial(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const ParticleMatrix X = cloud(J, 0), G = cloud(J, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::svgd_drift(X, G, 1.0, 0.5));
  state.SetComplexityN(J);
}

void BM_SvgdDriftOpenMP(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const ParticleMatrix X = cloud(J, 0), G = cloud(J, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::svgd_drift(X, G, 1.0, 0.5));
  state.SetComplexityN(J);
}

void BM_AiSvgdDriftSerial(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const ParticleMatrix X = cloud(J, 0), CG = cloud(J, 1);
  const Matrix Cinv = Matrix::Identity(2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::ai_svgd_drift(X, CG, Cinv, 1.0));
}

void BM_AiSvgdDriftOpenMP(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const ParticleMatrix X = cloud(J, 0), CG = cloud(J, 1);
  const Matrix Cinv = Matrix::Identity(2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::ai_svgd_drift(X, CG, Cinv, 1.0));
}

void moments(double x, double* out) {
  const double w = std::exp(-0.5 * x * x);
  out[0] = w;
  out[1] = w * x;
  out[2] = w * x * x;
}

void BM_TrapezoidSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::trapezoid_sum(-10, 10, state.range(0), 3, moments));
}

void BM_TrapezoidOpenMP(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kernels::trapezoid_sum(-10, 10, state.range(0), 3, moments));
}

}  // namespace

BENCHMARK(BM_SvgdDriftSerial)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_SvgdDriftOpenMP)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_AiSvgdDriftSerial)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_AiSvgdDriftOpenMP)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_TrapezoidSerial)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_TrapezoidOpenMP)->Arg(1 << 16)->Arg(1 << 20);

BENCHMARK_MAIN();
