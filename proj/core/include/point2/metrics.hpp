// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "point2/align.hpp"
#include "point2/geometry.hpp"

namespace point2 {

/// Mean over landmarks of ||est(X) - gt(X)||.
double mtre(const PointSet& landmarks, const RigidTransform& est, const RigidTransform& gt);
double mtre(const PointSet& landmarks, const RigidPose& est, const RigidPose& gt);

/// Mean 2D distance in pixels times the pixel spacing. Throws LengthMismatch.
double mpd(const std::vector<Vec2>& tracked_px, const std::vector<Vec2>& gt_px, double pixel_spacing_mm);

/// Linear interpolation between order statistics at rank q/100 * (n - 1).
double percentile(std::vector<double> values, double q);

inline constexpr double kGrossFailureMm = 10.0;

struct MetricsSummary {
  std::size_t count = 0;
  double mtre_p50 = 0.0;
  double mtre_p75 = 0.0;
  double mtre_p95 = 0.0;
  double gfr = 0.0;  // fraction in [0, 1] of cases with mTRE > 10 mm
  double mean_time_s = 0.0;
  double initial_p50 = 0.0;
};

struct RegistrationRecord;
/// Throws ValidationError on an empty record list.
MetricsSummary eval_metrics(const std::vector<RegistrationRecord>& records);

}  // namespace point2
