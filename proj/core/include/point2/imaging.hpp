// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "point2/geometry.hpp"
#include "point2/image.hpp"

namespace point2 {

/// Double-precision map on an image grid: similarity scores before the
/// sigmoid, or target probabilities.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Heatmap() = default;
  Heatmap(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
};

/// max(img) - img.
Image invert_intensity(const Image& img);

/// CDF remap onto (0, 1]. A constant image maps to all ones.
Image hist_equalize(const Image& img, int bins = 256);

inline constexpr double kTargetEpsilon = 1e-6;

/// Clamped isotropic Gaussian centred at poi_px, in probability space.
Heatmap gaussian_target(const Vec2& poi_px, double sigma_px, int width, int height);

struct PreprocessConfig {
  int bins = 256;
  /// Raw X-ray intensities are bright where attenuation is low; simulated
  /// X-rays are already line integrals and need no inversion.
  bool invert_xray = false;
};

Image preprocess_drr(const Image& drr, const PreprocessConfig& cfg);
Image preprocess_xray(const Image& xray, const PreprocessConfig& cfg);

}  // namespace point2
