// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "point2/phantom.hpp"
#include "point2/pipeline.hpp"
#include "point2/tracknet.hpp"
#include "point2/triangulate.hpp"
#include "point2/volume.hpp"

using namespace point2;

namespace {

void BM_RenderDrr(benchmark::State& state) {
  PhantomSpec spec;
  const VoxelVolume vol = make_phantom(spec);
  ImagingGeometry g;
  g.det_w = g.det_h = static_cast<int>(state.range(0));
  const RigidPose pose{{3, -2, 5}, Vec3(4, -6, 2)};
  for (auto _ : state) benchmark::DoNotOptimize(render_drr(vol, pose, ViewPose::lateral(), g));
  state.SetItemsProcessed(state.iterations() * g.det_w * g.det_h);
}
BENCHMARK(BM_RenderDrr)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const NetworkParams params = NetworkParams::init(TrackNetConfig{}, 1);
  Image img(side, side, 1.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : img.data) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(params, img));
}
BENCHMARK(BM_ExtractFeatures)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrackForward(benchmark::State& state) {
  const NetworkParams params = NetworkParams::init(TrackNetConfig{}, 1);
  const ag::Var drr = ag::make_tensor({1, 128, 128}, 0.5);
  const ag::Var xray = ag::make_tensor({1, 128, 128}, 0.25);
  std::vector<Vec2> pois;
  for (int i = 0; i < state.range(0); ++i) pois.emplace_back(20 + 5 * i % 90, 30 + 3 * i % 70);
  for (auto _ : state) benchmark::DoNotOptimize(track_forward(params, drr, xray, pois));
}
BENCHMARK(BM_TrackForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Triangulate(benchmark::State& state) {
  const ImagingGeometry g;
  const std::vector<ViewPose> views{ViewPose::anterior_posterior(), ViewPose::lateral()};
  const Vec3 x(12, -7, 30);
  std::vector<Vec2> pts;
  for (const auto& v : views) pts.push_back(project_point(x, v, g));
  for (auto _ : state) benchmark::DoNotOptimize(triangulate(build_system(pts, views, g)));
}
BENCHMARK(BM_Triangulate);

void BM_OracleRegistration(benchmark::State& state) {
  DatasetSpec spec;
  spec.n_volumes = 2;
  spec.test_volumes = 1;
  spec.cases_per_volume = 1;
  spec.test_cases_per_volume = 1;
  const Dataset ds = generate_dataset(spec);
  const DatasetCase& c = ds.cases.front();
  const OracleTracker tracker(gt_pois_px(c.data, ds.spec.geom));
  for (auto _ : state) {
    benchmark::DoNotOptimize(register_pose(ds.volumes[c.volume], c.data.ct_pois, c.data.xrays, c.data.views,
                                           ds.spec.geom, tracker, c.data.initial_pose));
  }
}
BENCHMARK(BM_OracleRegistration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
