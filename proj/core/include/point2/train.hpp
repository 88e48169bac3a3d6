// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Two-stage training of the per-view tracking networks and the ablation
// harness built on it.
//
// Stage 1 trains each view's network alone on the tracking BCE. Stage 2
// fine-tunes all views jointly through the triangulation layer with the
// combined loss. Updates are plain mini-batch SGD; with fixed seeds the run
// is deterministic.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "point2/pipeline.hpp"
#include "point2/tracknet.hpp"
#include "point2/triangulate.hpp"

namespace point2 {

struct TrainConfig {
  int stage1_epochs = 30;
  int stage2_epochs = 20;
  double lr1 = 0.01;
  double lr2 = 0.001;
  int batch_size = 4;
  int poi_batch = 16;     // POIs drawn per sample and step
  double w = 0.01;        // triangulation loss weight in stage 2
  double sigma_px = 2.0;  // ground-truth heatmap width
  PoiStrategy poi_strategy = PoiStrategy::kRandom;
  std::uint64_t seed = 7;
  PreprocessConfig preprocess;

  void validate() const;
};

/// One case prepared for training: preprocessed image tensors and POI
/// projections for every view.
struct TrainingSample {
  std::string id;
  std::vector<ag::Var> drr;                    // per view, (1, H, W)
  std::vector<ag::Var> xray;                   // per view, (1, H, W)
  std::vector<std::vector<Vec2>> drr_pois_px;  // [view][poi]
  std::vector<std::vector<Vec2>> xray_pois_px; // [view][poi]
  PointSet gt_3d;                              // [poi]
  std::vector<int> usable;                     // POIs inside every image with margin
  std::vector<RigidTransform> views;
};

/// Builds samples for one split. With PoiStrategy::kProvided the POI pool is
/// the volume's fixed landmark set instead of the case's random POIs.
std::vector<TrainingSample> make_training_samples(const Dataset& ds, Split split, const TrainConfig& cfg,
                                                  int kernel_radius);

struct SampleLoss {
  LossTerms terms;
  int tri_points = 0;
};

/// Loss of one sample on the given views and POIs. With w == 0 the
/// triangulation term is omitted and views are independent.
SampleLoss sample_loss(const std::vector<const NetworkParams*>& params, const TrainingSample& sample,
                       const std::vector<int>& views, const std::vector<int>& pois, double w, double sigma_px,
                       const ImagingGeometry& geom, ag::Tape* tape);

struct LossCurveRow {
  int epoch = 0;
  int stage = 1;
  double loss = 0.0;
  double bce = 0.0;
  double tri = 0.0;  // mean over samples of sum_j ||X_hat_j - X_j|| (mm); 0 in stage 1
};

struct TrainResult {
  std::vector<NetworkParams> stage1_params;  // per view, after stage 1
  std::vector<NetworkParams> params;         // per view, final
  std::vector<LossCurveRow> curve;
};

using TrainProgress = std::function<void(const LossCurveRow&)>;

/// Throws NonFiniteLoss with the offending sample and epoch.
TrainResult train(const Dataset& ds, const TrainConfig& cfg, const TrackNetConfig& net,
                  const TrainProgress& progress = {});

std::vector<RegistrationRecord> evaluate_split(const Dataset& ds, Split split, const PoiTracker& tracker,
                                               const RegisterConfig& cfg = {});

struct AblationSetting {
  int kernel_radius = 1;
  PoiStrategy strategy = PoiStrategy::kRandom;
  bool use_weight = true;
};

/// The rows of the POI-network ablation table that apply here: kernel sizes
/// 1/3/5 with random POIs, provided POIs, and the unweighted kernel.
std::vector<AblationSetting> default_ablation_grid();

struct TrackedPair {
  std::string case_id;
  int view = 0;
  int poi = 0;
  Vec2 tracked_px;
  Vec2 gt_px;
};

struct AblationRow {
  int index = 0;
  AblationSetting setting;
  double mpd_mm = 0.0;
  std::vector<TrackedPair> tracked;
};

/// Trains one tracker per setting (stage 1 only) and measures mPD on the test
/// split, tracking from DRRs at the initial pose.
std::vector<AblationRow> ablation_run(const Dataset& ds, const std::vector<AblationSetting>& grid,
                                      const TrainConfig& cfg, const TrackNetConfig& net);

/// mPD over a saved list of tracked pairs.
double mpd_of(const std::vector<TrackedPair>& pairs, double pixel_spacing_mm);

}  // namespace point2
