// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <optional>

#include "fixtures.hpp"
#include "point2/errors.hpp"
#include "point2/metrics.hpp"
#include "point2/pipeline.hpp"

using namespace point2;

namespace {

const Dataset& tiny() {
  static const Dataset ds = generate_dataset(testing::tiny_dataset_spec());
  return ds;
}

double max_angle_diff(const RigidPose& a, const RigidPose& b) {
  // Geodesic angle from ||Ra - Rb||_F = 2 sqrt(2) sin(angle / 2); stable near 0.
  const double f = (a.transform().rotation - b.transform().rotation).norm();
  return rad2deg(2.0 * std::asin(std::min(1.0, f / (2.0 * std::sqrt(2.0)))));
}

// Drops every POI after the first `keep`.
class DroppingTracker : public PoiTracker {
 public:
  DroppingTracker(std::vector<std::vector<Vec2>> pois, std::size_t keep) : pois_(std::move(pois)), keep_(keep) {}
  std::vector<std::optional<Vec2>> track(std::size_t view, const Image&, const Image&,
                                         const std::vector<Vec2>& drr) const override {
    std::vector<std::optional<Vec2>> out(drr.size());
    for (std::size_t j = 0; j < std::min(keep_, drr.size()); ++j) out[j] = pois_[view][j];
    return out;
  }

 private:
  std::vector<std::vector<Vec2>> pois_;
  std::size_t keep_;
};

}  // namespace

TEST_CASE("dataset generation is a pure function of the spec") {
  const Dataset& a = tiny();
  const Dataset b = generate_dataset(testing::tiny_dataset_spec());
  REQUIRE(a.cases.size() == 6);
  CHECK(a.split(Split::kTrain).size() == 4);
  CHECK(a.split(Split::kTest).size() == 2);
  CHECK(a.split(Split::kVal).empty());
  for (std::size_t v = 0; v < a.volumes.size(); ++v) CHECK(a.volumes[v].data == b.volumes[v].data);
  for (std::size_t i = 0; i < a.cases.size(); ++i) {
    CHECK(a.cases[i].id == b.cases[i].id);
    for (std::size_t k = 0; k < 2; ++k) CHECK(a.cases[i].data.xrays[k].data == b.cases[i].data.xrays[k].data);
    CHECK(a.cases[i].data.ct_pois == b.cases[i].data.ct_pois);
    // Identity initial pose and offsets within the configured ranges.
    CHECK(a.cases[i].data.initial_pose.t_mm.norm() == 0.0);
    for (double t : a.cases[i].data.gt_pose.theta_deg) CHECK(std::abs(t) <= 10.0);
  }
  CHECK(split_from_name("test") == Split::kTest);
  CHECK_THROWS_AS(split_from_name("holdout"), ValidationError);
  DatasetSpec bad = testing::tiny_dataset_spec();
  bad.test_volumes = 4;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("dataset.test_volumes"), ConfigError);
}

TEST_CASE("oracle tracker recovers the ground-truth pose") {
  const Dataset& ds = tiny();
  for (const auto& c : ds.cases) {
    const OracleTracker tracker(gt_pois_px(c.data, ds.spec.geom));
    const RegistrationResult r = register_pose(ds.volumes[c.volume], c.data.ct_pois, c.data.xrays, c.data.views,
                                               ds.spec.geom, tracker, c.data.initial_pose);
    CHECK((r.est_pose.t_mm - c.data.gt_pose.t_mm).norm() < 1e-6);
    CHECK(max_angle_diff(r.est_pose, c.data.gt_pose) < 1e-6);
    CHECK(r.pose_evaluations == 1);
    CHECK(r.survivors.size() == c.data.ct_pois.size());
    CHECK(r.time_s >= 0.0);

    const RegistrationRecord rec = evaluate_case(ds, c, tracker);
    CHECK(rec.success);
    CHECK(rec.mtre_final < 1e-6);
    CHECK(rec.mtre_initial == doctest::Approx(mtre(ds.landmarks[c.volume], c.data.initial_pose, c.data.gt_pose)));
  }
}

TEST_CASE("identity offset with the oracle gives the identity pose") {
  const Dataset& ds = tiny();
  const auto& c = ds.cases.front();
  CaseSpec cs;
  cs.noise_fraction = 0.0;
  const RegistrationCase rc = make_case(ds.volumes[c.volume], c.data.ct_pois, cs, ds.spec.geom, ds.spec.ray);
  const OracleTracker tracker(gt_pois_px(rc, ds.spec.geom));
  RegisterConfig cfg;
  cfg.render_drr = false;
  const RegistrationResult r = register_pose(ds.volumes[c.volume], rc.ct_pois, rc.xrays, rc.views, ds.spec.geom,
                                             tracker, RigidPose::identity(), cfg);
  CHECK(r.est_pose.t_mm.norm() < 1e-6);
  CHECK(max_angle_diff(r.est_pose, RigidPose::identity()) < 1e-6);
}

TEST_CASE("registration failures") {
  const Dataset& ds = tiny();
  const auto& c = ds.cases.front();
  const auto px = gt_pois_px(c.data, ds.spec.geom);

  // Coincident views make every POI rank deficient.
  const std::vector<ViewPose> same{ViewPose::anterior_posterior(), ViewPose::anterior_posterior()};
  const OracleTracker same_tracker({px[0], px[0]});
  CHECK_THROWS_AS(register_pose(ds.volumes[c.volume], c.data.ct_pois, c.data.xrays, same, ds.spec.geom,
                                same_tracker, RigidPose::identity()),
                  RegistrationFailed);

  const DroppingTracker two(px, 2);
  CHECK_THROWS_WITH_AS(register_pose(ds.volumes[c.volume], c.data.ct_pois, c.data.xrays, c.data.views,
                                     ds.spec.geom, two, RigidPose::identity()),
                       doctest::Contains("2 POIs survived"), RegistrationFailed);
  const DroppingTracker three(px, 3);
  const RegistrationResult r = register_pose(ds.volumes[c.volume], c.data.ct_pois, c.data.xrays, c.data.views,
                                             ds.spec.geom, three, RigidPose::identity());
  CHECK(r.survivors == std::vector<int>{0, 1, 2});
  CHECK((r.est_pose.t_mm - c.data.gt_pose.t_mm).norm() < 1e-6);

  // A failed case keeps the initial pose and scores it.
  const RegistrationRecord rec = evaluate_case(ds, c, two);
  CHECK_FALSE(rec.success);
  CHECK(rec.est_pose.t_mm == rec.initial_pose.t_mm);
  CHECK(rec.mtre_final == rec.mtre_initial);
  CHECK(rec.pose_evaluations == 1);
  CHECK(rec.failure.find("RegistrationFailed") != std::string::npos);
}
