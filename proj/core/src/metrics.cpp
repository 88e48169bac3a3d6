// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "point2/errors.hpp"
#include "point2/pipeline.hpp"

namespace point2 {

double mtre(const PointSet& landmarks, const RigidTransform& est, const RigidTransform& gt) {
  if (landmarks.empty()) throw ValidationError("mTRE needs at least one landmark");
  double total = 0.0;
  for (const auto& x : landmarks) total += (est.apply(x) - gt.apply(x)).norm();
  return total / static_cast<double>(landmarks.size());
}

double mtre(const PointSet& landmarks, const RigidPose& est, const RigidPose& gt) {
  return mtre(landmarks, est.transform(), gt.transform());
}

double mpd(const std::vector<Vec2>& tracked_px, const std::vector<Vec2>& gt_px, double pixel_spacing_mm) {
  if (tracked_px.size() != gt_px.size()) throw LengthMismatch("tracked and ground-truth lists differ in length");
  if (tracked_px.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < tracked_px.size(); ++i) total += (tracked_px[i] - gt_px[i]).norm();
  return total / static_cast<double>(tracked_px.size()) * pixel_spacing_mm;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

MetricsSummary eval_metrics(const std::vector<RegistrationRecord>& records) {
  if (records.empty()) throw ValidationError("no registration records");
  MetricsSummary s;
  s.count = records.size();
  std::vector<double> final_mtre, initial_mtre;
  double time_total = 0.0;
  std::size_t failures = 0;
  for (const auto& r : records) {
    final_mtre.push_back(r.mtre_final);
    initial_mtre.push_back(r.mtre_initial);
    time_total += r.time_s;
    if (r.mtre_final > kGrossFailureMm) ++failures;
  }
  s.mtre_p50 = percentile(final_mtre, 50.0);
  s.mtre_p75 = percentile(final_mtre, 75.0);
  s.mtre_p95 = percentile(final_mtre, 95.0);
  s.initial_p50 = percentile(initial_mtre, 50.0);
  s.gfr = static_cast<double>(failures) / static_cast<double>(records.size());
  s.mean_time_s = time_total / static_cast<double>(records.size());
  return s;
}

}  // namespace point2
