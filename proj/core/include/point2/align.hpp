// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "point2/geometry.hpp"

namespace point2 {

using PointSet = std::vector<Vec3>;

/// Least-squares rigid transform T minimising sum ||T source_i - target_i||^2
/// (Kabsch). Always returns a proper rotation.
/// Throws CorrespondenceMismatch on differing sizes and DegenerateShape for
/// fewer than 3 points or a collinear/coincident source.
RigidTransform procrustes_rigid(const PointSet& source, const PointSet& target);

/// Frobenius residual ||T source - target||_F.
double alignment_residual(const RigidTransform& tf, const PointSet& source, const PointSet& target);

}  // namespace point2
