// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Small datasets and networks shared by the pipeline, training and IO tests.

#pragma once

#include "point2/pipeline.hpp"
#include "point2/tracknet.hpp"
#include "point2/train.hpp"

namespace point2::testing {

inline DatasetSpec tiny_dataset_spec() {
  DatasetSpec s;
  s.phantom.dims = {32, 32, 32};
  s.phantom.spacing_mm = 4.0;
  s.phantom.n_blobs = 16;
  s.geom.det_w = s.geom.det_h = 32;
  s.geom.pixel_spacing_mm = 6.4;
  s.ray.step_mm = 4.0;
  s.n_volumes = 3;
  s.test_volumes = 1;
  s.cases_per_volume = 2;
  s.test_cases_per_volume = 2;
  s.poi_count = 12;
  s.landmark_count = 6;
  s.seed = 99;
  return s;
}

inline TrackNetConfig tiny_net() {
  TrackNetConfig c;
  c.depth = 2;
  c.base_channels = 4;
  c.channels = 4;
  c.window_px = 3;
  return c;
}

inline TrainConfig tiny_train() {
  TrainConfig t;
  t.stage1_epochs = 1;
  t.stage2_epochs = 1;
  t.batch_size = 2;
  t.poi_batch = 4;
  return t;
}

}  // namespace point2::testing
