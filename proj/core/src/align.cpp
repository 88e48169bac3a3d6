// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/align.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

#include "point2/errors.hpp"

namespace point2 {

RigidTransform procrustes_rigid(const PointSet& source, const PointSet& target) {
  if (source.size() != target.size()) {
    throw CorrespondenceMismatch(std::to_string(source.size()) + " source vs " +
                                 std::to_string(target.size()) + " target points");
  }
  if (source.size() < 3) throw DegenerateShape("at least 3 points are required");
  const double m = static_cast<double>(source.size());

  Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= m;
  ct /= m;

  Mat3 scatter = Mat3::Zero();
  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 ps = source[i] - cs;
    scatter += ps * ps.transpose();
    cross += ps * (target[i] - ct).transpose();
  }

  // Collinear or coincident sources leave the rotation about their axis
  // undetermined; a planar source is still fine.
  Eigen::JacobiSVD<Mat3> shape(scatter);
  const auto& sv = shape.singularValues();
  if (!(sv(0) > 0.0) || !(sv(1) > 1e-10 * sv(0))) {
    throw DegenerateShape("source points are collinear or coincident");
  }

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 fix = Mat3::Identity();
  if ((v * u.transpose()).determinant() < 0.0) fix(2, 2) = -1.0;

  RigidTransform tf;
  tf.rotation = v * fix * u.transpose();
  tf.translation = ct - tf.rotation * cs;
  return tf;
}

double alignment_residual(const RigidTransform& tf, const PointSet& source, const PointSet& target) {
  if (source.size() != target.size()) throw CorrespondenceMismatch("residual operands differ in size");
  double sq = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) sq += (tf.apply(source[i]) - target[i]).squaredNorm();
  return std::sqrt(sq);
}

}  // namespace point2
