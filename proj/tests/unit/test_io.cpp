// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "point2/errors.hpp"
#include "point2/io.hpp"
#include "point2/phantom.hpp"

using namespace point2;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("point2_io_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void check_pose_equal(const RigidPose& a, const RigidPose& b) {
  for (int k = 0; k < 3; ++k) CHECK(a.theta_deg[k] == b.theta_deg[k]);
  CHECK(a.t_mm == b.t_mm);
}

}  // namespace

TEST_CASE("volume and image roundtrip bitwise") {
  const TempDir dir;
  PhantomSpec spec;
  spec.dims = {12, 10, 8};
  spec.spacing_mm = 1.25;
  const VoxelVolume v = make_phantom(spec);
  io::write_volume(v, dir / "vol");
  const VoxelVolume r = io::read_volume(dir / "vol.raw");
  CHECK(r.dims == v.dims);
  CHECK(r.spacing_mm == v.spacing_mm);
  CHECK(r.data == v.data);

  Image img(5, 3, 0.7);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<float>(i) * 0.1f - 0.3f;
  io::write_image(img, dir / "img.json");
  const Image ri = io::read_image(dir / "img");
  CHECK(ri.width == 5);
  CHECK(ri.height == 3);
  CHECK(ri.pixel_spacing_mm == 0.7);
  CHECK(ri.data == img.data);

  CHECK_THROWS_AS(io::read_volume(dir / "missing"), IoError);
  io::write_text("{\"dims\": [2, 2, 2], \"spacing_mm\": 1}", dir / "short.json");
  io::write_text("abc", dir / "short.raw");
  CHECK_THROWS_AS(io::read_volume(dir / "short"), IoError);
}

TEST_CASE("params roundtrip at float32 precision") {
  const TempDir dir;
  const NetworkParams p = NetworkParams::init(testing::tiny_net(), 5);
  io::write_params(p, dir / "net");
  const NetworkParams r = io::read_params(dir / "net");
  CHECK(r.names == p.names);
  CHECK(r.config.depth == p.config.depth);
  CHECK(r.config.channels == p.config.channels);
  REQUIRE(r.tensors.size() == p.tensors.size());
  for (std::size_t t = 0; t < p.tensors.size(); ++t) {
    CHECK(r.tensors[t]->shape == p.tensors[t]->shape);
    for (std::size_t i = 0; i < p.tensors[t]->value.size(); ++i) {
      CHECK(r.tensors[t]->value[i] == static_cast<double>(static_cast<float>(p.tensors[t]->value[i])));
    }
  }
  // A second pass is exact.
  io::write_params(r, dir / "net2");
  const NetworkParams rr = io::read_params(dir / "net2");
  for (std::size_t t = 0; t < r.tensors.size(); ++t) CHECK(rr.tensors[t]->value == r.tensors[t]->value);
}

TEST_CASE("pose, geometry and points roundtrip") {
  const TempDir dir;
  const RigidPose pose{{1.0 / 3.0, -2.5, 7e-9}, Vec3(0.1, -1e10, 3.25)};
  check_pose_equal(io::pose_from_json(io::pose_to_json(pose)), pose);
  CHECK_THROWS_AS(io::pose_from_json("{\"theta_deg\": [1, 2]}"), ConfigError);

  ImagingGeometry g;
  g.det_w = 96;
  g.det_h = 64;
  g.pixel_spacing_mm = 0.3;
  const ImagingGeometry rg = io::geometry_from_json(io::geometry_to_json(g));
  CHECK(rg.det_w == 96);
  CHECK(rg.det_h == 64);
  CHECK(rg.pixel_spacing_mm == 0.3);
  CHECK(rg.d_mm == g.d_mm);
  CHECK(rg.c_mm == g.c_mm);

  const PointSet pts{Vec3(1.0 / 7.0, 2, 3), Vec3(-0.1, 1e-300, 5e7)};
  io::write_points_csv(pts, dir / "p.csv");
  CHECK(io::read_points_csv(dir / "p.csv") == pts);
}

TEST_CASE("records and tracked pairs roundtrip") {
  const TempDir dir;
  RegistrationRecord a;
  a.case_id = "v0_c1";
  a.gt_pose = RigidPose{{1, 2, 3}, Vec3(4, 5, 6)};
  a.est_pose = RigidPose{{1.1, 2.2, 3.3}, Vec3(4.4, 5.5, 6.6)};
  a.tracked_px = {{Vec2(1.5, 2.5), std::nullopt}, {std::nullopt, Vec2(0.1, 0.2)}};
  a.gt_px = {{Vec2(1, 2), Vec2(3, 4)}, {Vec2(5, 6), Vec2(7, 8)}};
  a.triangulated = {Vec3(1.0 / 3.0, 0, 0)};
  a.mtre_initial = 12.25;
  a.mtre_final = 1.0 / 9.0;
  a.time_s = 0.125;
  a.pose_evaluations = 1;
  RegistrationRecord b = a;
  b.case_id = "v1_c0";
  b.success = false;
  b.failure = "RegistrationFailed: 2 POIs survived tracking, 3 required";
  io::write_records({a, b}, dir / "r.jsonl");
  const auto recs = io::read_records(dir / "r.jsonl");
  REQUIRE(recs.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const RegistrationRecord& want = i == 0 ? a : b;
    const RegistrationRecord& got = recs[i];
    CHECK(got.case_id == want.case_id);
    check_pose_equal(got.gt_pose, want.gt_pose);
    check_pose_equal(got.est_pose, want.est_pose);
    check_pose_equal(got.initial_pose, want.initial_pose);
    CHECK(got.tracked_px == want.tracked_px);
    CHECK(got.gt_px == want.gt_px);
    CHECK(got.triangulated == want.triangulated);
    CHECK(got.mtre_initial == want.mtre_initial);
    CHECK(got.mtre_final == want.mtre_final);
    CHECK(got.time_s == want.time_s);
    CHECK(got.pose_evaluations == want.pose_evaluations);
    CHECK(got.success == want.success);
    CHECK(got.failure == want.failure);
  }
  CHECK_THROWS_AS(io::record_from_json("{\"case_id\": 3}"), IoError);

  const std::vector<TrackedPair> pairs{{"v0_c0", 1, 3, Vec2(1.0 / 3.0, 2), Vec2(0.5, -1e-7)}};
  io::write_tracked_csv(pairs, dir / "t.csv");
  const auto rp = io::read_tracked_csv(dir / "t.csv");
  REQUIRE(rp.size() == 1);
  CHECK(rp[0].case_id == "v0_c0");
  CHECK(rp[0].view == 1);
  CHECK(rp[0].poi == 3);
  CHECK(rp[0].tracked_px == pairs[0].tracked_px);
  CHECK(rp[0].gt_px == pairs[0].gt_px);
}

TEST_CASE("dataset roundtrip") {
  const TempDir dir;
  DatasetSpec spec = testing::tiny_dataset_spec();
  spec.n_volumes = 2;
  spec.cases_per_volume = 1;
  spec.test_cases_per_volume = 1;
  const Dataset ds = generate_dataset(spec);
  io::write_dataset(ds, dir / "ds");
  const Dataset r = io::read_dataset(dir / "ds");
  REQUIRE(r.volumes.size() == ds.volumes.size());
  REQUIRE(r.cases.size() == ds.cases.size());
  CHECK(r.volume_seeds == ds.volume_seeds);
  CHECK(r.spec.seed == ds.spec.seed);
  for (std::size_t v = 0; v < ds.volumes.size(); ++v) {
    CHECK(r.volumes[v].data == ds.volumes[v].data);
    CHECK(r.landmarks[v] == ds.landmarks[v]);
  }
  for (std::size_t i = 0; i < ds.cases.size(); ++i) {
    const auto& a = ds.cases[i];
    const auto& b = r.cases[i];
    CHECK(a.id == b.id);
    CHECK(a.split == b.split);
    CHECK(a.seed == b.seed);
    check_pose_equal(a.data.gt_pose, b.data.gt_pose);
    REQUIRE(b.data.xrays.size() == a.data.xrays.size());
    for (std::size_t k = 0; k < a.data.xrays.size(); ++k) CHECK(a.data.xrays[k].data == b.data.xrays[k].data);
    CHECK(a.data.gt_2d_mm == b.data.gt_2d_mm);
    CHECK(a.data.ct_pois == b.data.ct_pois);
    CHECK(a.data.gt_3d == b.data.gt_3d);
  }
  CHECK_THROWS_AS(io::read_dataset(dir / "nowhere"), IoError);
}
