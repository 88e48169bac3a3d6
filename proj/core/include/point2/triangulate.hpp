// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Linear multiview triangulation and its gradient.
//
// Each view contributes the two rows of D(x) R_view X = c x - D(x) t_view
// with D(x) = [[d, 0, x], [0, d, y]]. Stacking the views gives A X = b,
// solved in the least-squares sense through the SVD pseudoinverse.

#pragma once

#include <Eigen/Core>

#include <vector>

#include "point2/autograd.hpp"
#include "point2/geometry.hpp"

namespace point2 {

struct TriSystem {
  Eigen::MatrixXd a;  // 2n x 3
  Eigen::VectorXd b;  // 2n
  // Inputs kept for differentiation.
  std::vector<Vec2> pois_mm;
  std::vector<RigidTransform> views;
  double d_mm = 0.0;
  double c_mm = 0.0;

  int view_count() const { return static_cast<int>(views.size()); }
};

/// Relative singular-value gate for rank detection.
inline constexpr double kRankGate = 1e-8;

TriSystem build_system(const std::vector<Vec2>& pois_mm, const std::vector<RigidTransform>& views,
                       const ImagingGeometry& geom);
TriSystem build_system(const std::vector<Vec2>& pois_mm, const std::vector<ViewPose>& views,
                       const ImagingGeometry& geom);

/// X = A^+ b. Throws RankDeficient when sigma_min <= 1e-8 sigma_max.
Vec3 triangulate(const TriSystem& sys);

/// d(loss)/d(x_i) for every view's detector point (mm), given
/// upstream = d(loss)/dX, by implicit differentiation of the normal equations.
std::vector<Vec2> triangulate_grad(const TriSystem& sys, const Vec3& upstream);

/// Differentiable triangulation from per-view pixel POIs ((2) tensors).
/// Output (3) in millimetres.
ag::Var triangulate_layer(const std::vector<ag::Var>& pois_px, const std::vector<RigidTransform>& views,
                          const ImagingGeometry& geom, ag::Tape* tape = nullptr);

struct LossConfig {
  double w = 0.01;
  void validate() const;
};

struct LossTerms {
  ag::Var total;
  double bce = 0.0;       // mean pixelwise BCE over all maps
  double tri_sum = 0.0;   // sum over POIs of ||X_hat - X||_2 (mm)
};

/// heatmaps[i][j] / targets[i][j]: view i, POI j. tri_points may be empty
/// (pure tracking loss). Total = mean BCE + (w / n) * tri_sum, n = view count.
LossTerms point2_loss(const std::vector<std::vector<ag::Var>>& heatmaps,
                      const std::vector<std::vector<std::vector<double>>>& targets,
                      const std::vector<ag::Var>& tri_points, const std::vector<Vec3>& gt_points,
                      const LossConfig& cfg, ag::Tape* tape = nullptr);

}  // namespace point2
