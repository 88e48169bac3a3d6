// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/imaging.hpp"

#include <algorithm>
#include <cmath>

#include "point2/errors.hpp"

namespace point2 {

Image invert_intensity(const Image& img) {
  Image out = img;
  if (img.data.empty()) return out;
  const float top = *std::max_element(img.data.begin(), img.data.end());
  for (auto& v : out.data) v = top - v;
  return out;
}

Image hist_equalize(const Image& img, int bins) {
  if (bins < 2) throw ValidationError("bins must be >= 2");
  Image out = img;
  if (img.data.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(out.data.begin(), out.data.end(), 1.0f);
    return out;
  }
  const double scale = bins / (hi - lo);
  auto bin_of = [&](float v) {
    const int b = static_cast<int>((v - lo) * scale);
    return std::clamp(b, 0, bins - 1);
  };
  std::vector<double> cdf(bins, 0.0);
  for (float v : img.data) cdf[bin_of(v)] += 1.0;
  const double n = static_cast<double>(img.data.size());
  double running = 0.0;
  for (auto& c : cdf) {
    running += c;
    c = running / n;
  }
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = static_cast<float>(cdf[bin_of(img.data[i])]);
  }
  return out;
}

Heatmap gaussian_target(const Vec2& poi_px, double sigma_px, int width, int height) {
  if (!(sigma_px > 0.0)) throw ValidationError("sigma_px must be > 0");
  Heatmap map(width, height);
  const double inv = 1.0 / (2.0 * sigma_px * sigma_px);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double du = u - poi_px.x();
      const double dv = v - poi_px.y();
      const double p = std::exp(-(du * du + dv * dv) * inv);
      map.at(u, v) = std::clamp(p, kTargetEpsilon, 1.0 - kTargetEpsilon);
    }
  }
  return map;
}

Image preprocess_drr(const Image& drr, const PreprocessConfig& cfg) {
  return hist_equalize(drr, cfg.bins);
}

Image preprocess_xray(const Image& xray, const PreprocessConfig& cfg) {
  return hist_equalize(cfg.invert_xray ? invert_intensity(xray) : xray, cfg.bins);
}

}  // namespace point2
