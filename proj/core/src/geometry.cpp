// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "point2/errors.hpp"

namespace point2 {

Mat3 rotation_from_euler(const std::array<double, 3>& theta_deg) {
  const double ax = deg2rad(theta_deg[0]);
  const double ay = deg2rad(theta_deg[1]);
  const double az = deg2rad(theta_deg[2]);
  const double cx = std::cos(ax), sx = std::sin(ax);
  const double cy = std::cos(ay), sy = std::sin(ay);
  const double cz = std::cos(az), sz = std::sin(az);
  Mat3 r;
  r << cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx,
       sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx,
       -sy,     cy * sx,                cy * cx;
  return r;
}

std::array<double, 3> euler_from_rotation(const Mat3& r) {
  const double sy = std::clamp(-r(2, 0), -1.0, 1.0);
  const double ay = std::asin(sy);
  double ax = 0.0;
  double az = 0.0;
  if (std::abs(std::cos(ay)) > 1e-12) {
    ax = std::atan2(r(2, 1), r(2, 2));
    az = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: only theta_z -/+ theta_x is observable.
    az = std::atan2(-r(0, 1), r(1, 1));
  }
  return {rad2deg(ax), rad2deg(ay), rad2deg(az)};
}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
  RigidTransform tf;
  tf.rotation = m.topLeftCorner<3, 3>();
  tf.translation = m.topRightCorner<3, 1>();
  return tf;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

RigidPose RigidPose::from_transform(const RigidTransform& tf) {
  RigidPose pose;
  pose.theta_deg = euler_from_rotation(tf.rotation);
  pose.t_mm = tf.translation;
  return pose;
}

RigidTransform RigidPose::transform() const {
  RigidTransform tf;
  tf.rotation = rotation_from_euler(theta_deg);
  tf.translation = t_mm;
  return tf;
}

void RigidPose::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(theta_deg[i])) {
      throw ValidationError("pose.theta_deg[" + std::to_string(i) + "] is not finite");
    }
    if (!std::isfinite(t_mm[i])) {
      throw ValidationError("pose.t_mm[" + std::to_string(i) + "] is not finite");
    }
  }
}

Vec3 pose_apply(const RigidPose& pose, const Vec3& p) { return pose.transform().apply(p); }

Mat4 pose_compose(const RigidPose& a, const RigidPose& b) {
  return (a.transform() * b.transform()).matrix();
}

Mat4 pose_invert(const RigidPose& pose) { return pose.transform().inverse().matrix(); }

void ImagingGeometry::validate() const {
  if (!(std::isfinite(c_mm) && c_mm > 0.0)) throw InvalidGeometry("c_mm must be > 0");
  if (!(std::isfinite(d_mm) && d_mm > c_mm)) throw InvalidGeometry("d_mm must be > c_mm");
  if (det_w < 1) throw InvalidGeometry("det_px[0] must be >= 1");
  if (det_h < 1) throw InvalidGeometry("det_px[1] must be >= 1");
  if (!(std::isfinite(pixel_spacing_mm) && pixel_spacing_mm > 0.0)) {
    throw InvalidGeometry("pixel_spacing_mm must be > 0");
  }
}

Vec2 project_point(const Vec3& x, const RigidTransform& view, const ImagingGeometry& geom) {
  // x' = K [R_view | t_view + h] (X; 1) with K = diag(-d, -d, 1), h = (0, 0, -c).
  const Vec3 q = view.apply(x);
  const double xh = -geom.d_mm * q.x();
  const double yh = -geom.d_mm * q.y();
  const double zh = q.z() - geom.c_mm;
  if (std::abs(zh) < 1e-9) {
    throw DegenerateProjection("point lies in the source plane (|z'| < 1e-9)");
  }
  return {xh / zh, yh / zh};
}

Vec2 project_point(const Vec3& x, const ViewPose& view, const ImagingGeometry& geom) {
  return project_point(x, view.transform(), geom);
}

Vec2 detector_mm_to_px(const Vec2& x_mm, const ImagingGeometry& geom) {
  const double cu = 0.5 * (geom.det_w - 1);
  const double cv = 0.5 * (geom.det_h - 1);
  return {x_mm.x() / geom.pixel_spacing_mm + cu, x_mm.y() / geom.pixel_spacing_mm + cv};
}

Vec2 detector_px_to_mm(const Vec2& x_px, const ImagingGeometry& geom) {
  const double cu = 0.5 * (geom.det_w - 1);
  const double cv = 0.5 * (geom.det_h - 1);
  return {(x_px.x() - cu) * geom.pixel_spacing_mm, (x_px.y() - cv) * geom.pixel_spacing_mm};
}

}  // namespace point2
