// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Rigid transforms and the isocenter pinhole model of a calibrated C-arm.
//
// Frame conventions:
//   * The isocenter is the origin. In the canonical view the X-ray source
//     sits at (0, 0, c) and the detector plane is z = c - d, so a point on
//     the detector plane has detector coordinates equal to its (x, y).
//   * A view transform T_view maps isocenter coordinates into the canonical
//     imaging frame before projection.
//   * Euler angles are extrinsic about fixed x, y, z axes, R = Rz * Ry * Rx,
//     degrees at every interface.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <vector>

namespace point2 {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

Mat3 rotation_from_euler(const std::array<double, 3>& theta_deg);

/// Extracts (theta_x, theta_y, theta_z) in degrees such that
/// rotation_from_euler(result) == r. Near gimbal lock theta_x is set to 0.
std::array<double, 3> euler_from_rotation(const Mat3& r);

/// A rigid transform p -> R p + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Mat4& m);

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  Mat4 matrix() const;

  /// (a * b).apply(p) == a.apply(b.apply(p))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);
};

/// Six-parameter pose: rotations about the isocenter axes then translation.
struct RigidPose {
  std::array<double, 3> theta_deg{0.0, 0.0, 0.0};
  Vec3 t_mm = Vec3::Zero();

  static RigidPose identity() { return {}; }
  static RigidPose from_transform(const RigidTransform& tf);

  RigidTransform transform() const;
  Mat4 matrix() const { return transform().matrix(); }
  void validate() const;
};

Vec3 pose_apply(const RigidPose& pose, const Vec3& p);
Mat4 pose_compose(const RigidPose& a, const RigidPose& b);
Mat4 pose_invert(const RigidPose& pose);

/// The transform T_view that takes the canonical imaging arrangement to a
/// particular C-arm view.
struct ViewPose {
  RigidPose pose;

  /// Anterior-posterior: the canonical view.
  static ViewPose anterior_posterior() { return {}; }
  /// Lateral: 90 degrees about the y axis.
  static ViewPose lateral() { return {RigidPose{{0.0, 90.0, 0.0}, Vec3::Zero()}}; }

  RigidTransform transform() const { return pose.transform(); }
};

struct ImagingGeometry {
  double d_mm = 1500.0;  // source to detector
  double c_mm = 1000.0;  // source to isocenter
  int det_w = 128;
  int det_h = 128;
  double pixel_spacing_mm = 1.6;

  /// Throws InvalidGeometry naming the first offending field.
  void validate() const;
};

/// Projects an isocenter-frame point to detector millimetres. Throws
/// DegenerateProjection when the point lies in the source plane.
Vec2 project_point(const Vec3& x, const ViewPose& view, const ImagingGeometry& geom);

/// Same projection through an explicit rigid transform (R_view, t_view).
Vec2 project_point(const Vec3& x, const RigidTransform& view, const ImagingGeometry& geom);

/// Detector millimetres to pixel coordinates. The millimetre origin sits at
/// the image centre ((w-1)/2, (h-1)/2); +x is +column and +y is +row.
Vec2 detector_mm_to_px(const Vec2& x_mm, const ImagingGeometry& geom);
Vec2 detector_px_to_mm(const Vec2& x_px, const ImagingGeometry& geom);

}  // namespace point2
