// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// One JSON file configures a whole run. Sections mirror the module configs:
//
//   {"geometry": {...}, "phantom": {...}, "dataset": {...},
//    "tracknet": {...}, "train": {...}, "loss": {"w": 0.01},
//    "paths": {"out_dir": ..., "dataset_dir": ..., "params": ..., "records": ...}}
//
// Missing keys keep their defaults. Any key can be overridden with a
// "section.key=value" string, where value is parsed as JSON and falls back
// to a plain string.

#pragma once

#include <string>
#include <vector>

#include "point2/geometry.hpp"
#include "point2/phantom.hpp"
#include "point2/pipeline.hpp"
#include "point2/tracknet.hpp"
#include "point2/train.hpp"
#include "point2/triangulate.hpp"

namespace point2 {

struct RunPaths {
  std::string out_dir = "out";
  std::string dataset_dir = "out/dataset";
  std::string params = "out/params";  // per-view files get a _view<i> suffix
  std::string records = "out/records.jsonl";
};

struct RunConfig {
  ImagingGeometry geometry;
  PhantomSpec phantom;
  DatasetSpec dataset;  // phantom and geometry are taken from the sections above
  TrackNetConfig tracknet;
  TrainConfig train;
  LossConfig loss;      // loss.w is the stage-2 weight used by training
  RunPaths paths;

  /// Throws ConfigError (or InvalidGeometry) naming the offending field.
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});
/// Defaults plus overrides, validated.
RunConfig default_run_config(const std::vector<std::string>& overrides = {});
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace point2
