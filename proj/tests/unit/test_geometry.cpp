// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "point2/errors.hpp"
#include "point2/geometry.hpp"

using namespace point2;

namespace {

// Axis rotations written out by hand, independent of the library.
Mat3 rx(double deg) {
  const double a = deg * kPi / 180.0, c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}
Mat3 ry(double deg) {
  const double a = deg * kPi / 180.0, c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}
Mat3 rz(double deg) {
  const double a = deg * kPi / 180.0, c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

RigidPose random_pose(std::mt19937_64& rng, double rot = 30.0, double trans = 50.0) {
  std::uniform_real_distribution<double> r(-rot, rot), t(-trans, trans);
  return RigidPose{{r(rng), r(rng), r(rng)}, Vec3(t(rng), t(rng), t(rng))};
}

}  // namespace

TEST_CASE("rotation_from_euler examples") {
  CHECK((rotation_from_euler({0, 0, 0}) - Mat3::Identity()).norm() < 1e-15);
  const Vec3 y = rotation_from_euler({0, 0, 90}) * Vec3(1, 0, 0);
  CHECK((y - Vec3(0, 1, 0)).norm() < 1e-12);
  // Element-wise product of the three axis matrices in z, y, x order.
  const Mat3 oracle = rz(30) * ry(20) * rx(10);
  const Mat3 r = rotation_from_euler({10, 20, 30});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(r(i, j) == doctest::Approx(oracle(i, j)).epsilon(1e-14));
  }
}

TEST_CASE("rotations are orthonormal with det +1 and euler roundtrips") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> a(-170, 170), b(-85, 85);
  for (int t = 0; t < 500; ++t) {
    const std::array<double, 3> th{a(rng), b(rng), a(rng)};
    const Mat3 r = rotation_from_euler(th);
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
    const auto back = euler_from_rotation(r);
    CHECK((rotation_from_euler(back) - r).norm() < 1e-10);
  }
}

TEST_CASE("pose_apply examples and invert roundtrip") {
  CHECK((pose_apply(RigidPose::identity(), Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0.0);
  RigidPose t;
  t.t_mm = Vec3(5, 0, 0);
  CHECK((pose_apply(t, Vec3::Zero()) - Vec3(5, 0, 0)).norm() == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const RigidPose p = random_pose(rng);
    const Vec3 x(u(rng), u(rng), u(rng));
    const Mat4 inv = pose_invert(p);
    const Vec3 y = pose_apply(p, x);
    const Vec3 back = (inv * y.homogeneous()).head<3>();
    CHECK((back - x).norm() < 1e-10);
  }
}

TEST_CASE("pose compose and transform algebra") {
  std::mt19937_64 rng(5);
  const RigidPose a = random_pose(rng), b = random_pose(rng);
  const Vec3 x(1, -2, 3);
  const Vec3 lhs = (pose_compose(a, b) * x.homogeneous()).head<3>();
  CHECK((lhs - pose_apply(a, pose_apply(b, x))).norm() < 1e-10);
  const RigidTransform ta = a.transform();
  CHECK(((ta * ta.inverse()).matrix() - Mat4::Identity()).norm() < 1e-12);
  CHECK((RigidTransform::from_matrix(ta.matrix()).matrix() - ta.matrix()).norm() == 0.0);
  const RigidPose back = RigidPose::from_transform(ta);
  CHECK((back.transform().matrix() - ta.matrix()).norm() < 1e-10);
}

TEST_CASE("project_point examples") {
  const ImagingGeometry g;  // d 1500, c 1000
  const ViewPose ap = ViewPose::anterior_posterior();
  CHECK(project_point(Vec3::Zero(), ap, g).norm() == 0.0);
  const Vec2 x = project_point(Vec3(10, 0, 0), ap, g);
  CHECK(x.x() == doctest::Approx(15.0).epsilon(1e-14));
  CHECK(x.y() == doctest::Approx(0.0));
  CHECK_THROWS_AS(project_point(Vec3(0, 0, 1000), ap, g), DegenerateProjection);
}

TEST_CASE("projection satisfies the triangulation rewrite") {
  const ImagingGeometry g;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform view = random_pose(rng, 90, 20).transform();
    const Vec3 X(u(rng), u(rng), u(rng));
    const Vec2 x = project_point(X, view, g);
    Eigen::Matrix<double, 2, 3> d;
    d << g.d_mm, 0, x.x(), 0, g.d_mm, x.y();
    const Eigen::Vector2d lhs = d * view.apply(X);
    const Eigen::Vector2d rhs = g.c_mm * x;
    CHECK((lhs - rhs).norm() <= 1e-8 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("projection is invariant to homogeneous scaling") {
  // Oracle: K [R|t] with K = [[-d,0,0],[0,-d,0],[0,0,1]] after shifting the source to the origin.
  const ImagingGeometry g;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-100, 100), lam(-5, 5);
  for (int i = 0; i < 100; ++i) {
    const Vec3 X(u(rng), u(rng), u(rng));
    Vec3 h(-g.d_mm * X.x(), -g.d_mm * X.y(), X.z() - g.c_mm);
    double l = lam(rng);
    if (std::abs(l) < 0.1) l = 1.3;
    h *= l;
    const Vec2 x = project_point(X, ViewPose::anterior_posterior(), g);
    CHECK(std::abs(h.x() / h.z() - x.x()) < 1e-10);
    CHECK(std::abs(h.y() / h.z() - x.y()) < 1e-10);
  }
}

TEST_CASE("lateral view rotates 90 degrees about y") {
  const ImagingGeometry g;
  const Vec3 X(0, 0, 10);
  // R_y(90) maps (0,0,10) to (10,0,0), which the AP view sends to (15, 0).
  const Vec2 x = project_point(X, ViewPose::lateral(), g);
  CHECK(x.x() == doctest::Approx(15.0));
  CHECK(std::abs(x.y()) < 1e-12);
}

TEST_CASE("detector mm and pixel conversions") {
  ImagingGeometry g;
  g.det_w = g.det_h = 512;
  g.pixel_spacing_mm = 0.388;
  const Vec2 c = detector_mm_to_px(Vec2(0, 0), g);
  CHECK(c.x() == doctest::Approx(255.5));
  CHECK(c.y() == doctest::Approx(255.5));
  const Vec2 s = detector_mm_to_px(Vec2(0.388, 0), g);
  CHECK(s.x() == doctest::Approx(256.5));
  CHECK(s.y() == doctest::Approx(255.5));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 100; ++i) {
    const Vec2 x(u(rng), u(rng));
    CHECK((detector_px_to_mm(detector_mm_to_px(x, g), g) - x).norm() < 1e-12);
  }
}

TEST_CASE("geometry validation names the field") {
  ImagingGeometry g;
  g.d_mm = 900;  // detector closer than isocenter
  CHECK_THROWS_AS(g.validate(), InvalidGeometry);
  g = {};
  g.det_w = 0;
  CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("det"), InvalidGeometry);
  g = {};
  g.pixel_spacing_mm = -1;
  CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("pixel_spacing_mm"), InvalidGeometry);
  RigidPose p;
  p.t_mm = Vec3(std::nan(""), 0, 0);
  CHECK_THROWS_AS(p.validate(), ValidationError);
}
