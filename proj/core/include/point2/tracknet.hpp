// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// The POI tracking network: a Siamese encoder-decoder that maps an image to a
// per-pixel feature map, a feature-extraction (FE) layer that samples a
// (2K+1) x (2K+1) feature kernel around a DRR point, POI convolution that
// correlates the kernel with the X-ray feature map, and a sigmoid-weighted
// centroid that turns the resulting heatmap into a 2D point.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "point2/autograd.hpp"
#include "point2/geometry.hpp"
#include "point2/image.hpp"
#include "point2/imaging.hpp"

namespace point2 {

struct TrackNetConfig {
  int depth = 3;          // stride-2 encoder blocks; input sides must divide 2^depth
  int base_channels = 8;  // first encoder width, doubled per level up to 4x
  int channels = 8;       // C, feature-map channels
  int kernel_radius = 1;  // K; the feature kernel is (2K+1) x (2K+1)
  bool use_weight = true; // learned W in POI convolution; all-ones when off
  ag::NormMode norm = ag::NormMode::kBatch;
  double leaky_slope = 0.2;
  int window_px = 8;      // heatmap centroid window radius

  int encoder_channels(int level) const;  // level in [1, depth]
  void validate() const;
};

/// All trainable tensors of one view's network. The Siamese branch weights
/// are used for both the DRR and the X-ray, so one set serves both roles.
struct NetworkParams {
  TrackNetConfig config;
  std::vector<std::string> names;
  std::vector<ag::Var> tensors;

  /// He-initialised weights, unit BN scale, zero biases, W = 1 / W.size(),
  /// heatmap offset kHeatmapPriorLogit.
  static NetworkParams init(const TrackNetConfig& cfg, std::uint64_t seed);
  static NetworkParams zeros(const TrackNetConfig& cfg);

  const ag::Var& get(const std::string& name) const;
  const ag::Var& poi_weight() const { return get("poi.weight"); }
  NetworkParams clone() const;
  void zero_grad();
  std::size_t parameter_count() const;
};

/// Initial heatmap offset: the logit of a 1% foreground prior, so the first
/// steps are not spent pushing every background pixel down.
inline constexpr double kHeatmapPriorLogit = -4.59511985013459;

ag::Var image_tensor(const Image& img);

/// phi(image): (1, H, W) -> (C, H, W). Throws BadShape when H or W is not a
/// multiple of 2^depth.
ag::Var extract_features(const NetworkParams& params, const ag::Var& image, ag::Tape* tape = nullptr);
ag::Var extract_features(const NetworkParams& params, const Image& image);

/// Bilinear samples of fmap at poi + (dx, dy) for dx, dy in [-K, K]; output
/// (C, 2K+1, 2K+1). poi is a (2) tensor (u, v) in pixels. Throws OutOfBounds
/// when any sample needs a pixel outside the map.
ag::Var fe_layer(const ag::Var& fmap, const ag::Var& poi, int radius, ag::Tape* tape = nullptr);
ag::Var fe_layer(const ag::Var& fmap, const Vec2& poi_px, int radius);

/// Cross-correlation of the X-ray feature map with (W * kernel), zero padded,
/// output (1, H, W). With use_weight off W is replaced by ones.
ag::Var poi_convolution(const ag::Var& fmap_x, const ag::Var& kernel, const ag::Var& weight,
                        bool use_weight, ag::Tape* tape = nullptr);

/// Heatmap logits: POI convolution plus the learned scalar offset poi.bias.
ag::Var heatmap_logits(const NetworkParams& params, const ag::Var& fmap_x, const ag::Var& kernel,
                       ag::Tape* tape = nullptr);

/// Sigmoid-weighted centroid of the heatmap inside a (2r+1)^2 window around
/// its global argmax; output (2) = (u, v) pixels. Throws DegenerateHeatmap
/// when the weight sum is below 1e-12.
ag::Var heatmap_to_poi(const ag::Var& heatmap, int window_px, ag::Tape* tape = nullptr);
Vec2 heatmap_to_poi(const Heatmap& heatmap, int window_px);

Heatmap to_heatmap(const ag::Var& map);

/// One view's tracker forward pass: features of both images, then one heatmap
/// per DRR POI. POIs whose kernel footprint leaves the map yield an empty Var.
struct TrackOutput {
  ag::Var drr_features;
  ag::Var xray_features;
  std::vector<ag::Var> heatmaps;
};
TrackOutput track_forward(const NetworkParams& params, const ag::Var& drr, const ag::Var& xray,
                          const std::vector<Vec2>& drr_pois_px, ag::Tape* tape = nullptr);

}  // namespace point2
