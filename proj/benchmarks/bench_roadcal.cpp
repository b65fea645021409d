// Copyright 2026 The roadcal Authors
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


#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "roadcal/assignment.hpp"
#include "roadcal/pipeline.hpp"
#include "roadcal/pnp.hpp"
#include "roadcal/synthgen.hpp"

namespace
{

using namespace roadcal;

Intrinsics bench_intrinsics() { return Intrinsics{1400.0, 1400.0, 960.0, 600.0, 1920, 1200}; }

std::vector<Correspondence> make_correspondences(std::size_t n, double outlier_ratio, std::uint64_t seed)
{
  const Intrinsics intr = bench_intrinsics();
  const auto calib = ExtrinsicCalibration::from_center(
    rotation_from_euler(-M_PI / 2 - 0.35, 0.0, 0.6 - M_PI / 2).transpose(), Vec3(-10, -12, 8));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  std::uniform_real_distribution<double> z(0.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Correspondence> out;
  while (out.size() < n) {
    const Vec3 p(u(rng), u(rng), z(rng));
    const auto px = try_project(intr, calib, p);
    if (!px || !in_frustum(intr, calib, p)) {
      continue;
    }
    Correspondence c;
    c.world = p;
    c.pixel = unit(rng) < outlier_ratio ? Vec2(unit(rng) * intr.width, unit(rng) * intr.height) : *px;
    out.push_back(c);
  }
  return out;
}

void BM_Assignment(benchmark::State & state)
{
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Eigen::MatrixXd cost(n, n + 2);
  for (Eigen::Index i = 0; i < cost.size(); ++i) {
    cost(i) = u(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_assignment(cost));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Assignment)->RangeMultiplier(2)->Range(4, 128)->Complexity();

void BM_Epnp(benchmark::State & state)
{
  const auto corrs = make_correspondences(static_cast<std::size_t>(state.range(0)), 0.0, 2);
  const Intrinsics intr = bench_intrinsics();
  for (auto _ : state) {
    benchmark::DoNotOptimize(epnp(corrs, intr));
  }
}
BENCHMARK(BM_Epnp)->Arg(8)->Arg(64)->Arg(512);

void BM_RansacPnp(benchmark::State & state)
{
  const auto corrs = make_correspondences(static_cast<std::size_t>(state.range(0)), 0.3, 3);
  const Intrinsics intr = bench_intrinsics();
  const RansacParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ransac_pnp(corrs, intr, params));
  }
}
BENCHMARK(BM_RansacPnp)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State & state)
{
  const auto config = intersection_scenario(2, static_cast<int>(state.range(0)), 0.075, 1);
  const auto scene = generate(config);
  const PipelineConfig pc;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_calibration(pc, scene.frames, scene.log, config.intrinsics));
  }
}
BENCHMARK(BM_Pipeline)->Arg(0)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
