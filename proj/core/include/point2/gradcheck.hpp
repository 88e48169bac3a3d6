// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference checks of the analytic gradients.
//
// Each check compares a gradient tensor with its finite-difference estimate
// by the norm-wise relative error |g - g_fd| / max(|g|, |g_fd|). Entries whose
// one-sided differences disagree (a ReLU kink or an argmax switch inside
// [x - h, x + h]) are skipped and counted; a check that skips more than one
// entry and more than 10% of its entries fails.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "point2/tracknet.hpp"

namespace point2 {

struct GradCheckOptions {
  double h = 1e-6;  // larger steps cross LeakyReLU kinks on 16x16 nets
  double tol = 1e-4;
  /// Network shape for the tracknet suite; inputs are size x size.
  TrackNetConfig net{2, 4, 4, 1, true, ag::NormMode::kBatch, 0.2, 3};
  int size = 16;
};

struct GradCheckResult {
  std::string name;
  double rel_error = 0.0;
  std::size_t entries = 0;
  std::size_t skipped = 0;
  bool pass = false;
};

/// Every network parameter, both input images, and the FE-layer POI, through
/// a loss that combines the BCE of the heatmap with its soft-argmax POI.
std::vector<GradCheckResult> gradcheck_tracknet(std::uint64_t seed, const GradCheckOptions& opt = {});
GradCheckResult gradcheck_heatmap_to_poi(std::uint64_t seed, const GradCheckOptions& opt = {});
/// Step in millimetres on the detector points.
GradCheckResult gradcheck_triangulate(std::uint64_t seed, double h_mm = 1e-5, double tol = 1e-4);
/// Heatmap logits and pixel POIs through point2_loss with the triangulation term.
std::vector<GradCheckResult> gradcheck_point2_loss(std::uint64_t seed, const GradCheckOptions& opt = {});

/// All suites on each seed.
std::vector<GradCheckResult> gradcheck_all(const std::vector<std::uint64_t>& seeds, const GradCheckOptions& opt = {});

}  // namespace point2
