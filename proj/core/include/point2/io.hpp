// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// File formats.
//
//   volume   <base>.raw  little-endian float32, x fastest
//            <base>.json {"dims": [nx, ny, nz], "spacing_mm": s}
//   image    <base>.raw  little-endian float32, row-major
//            <base>.json {"width": w, "height": h, "pixel_spacing_mm": s}
//   params   <base>.bin  little-endian float32 tensors back to back
//            <base>.json {"config": {...}, "tensors": [{"name", "shape", "offset", "count"}]}
//   pose     {"theta_deg": [3], "t_mm": [3]}
//   geometry {"d_mm", "c_mm", "det_px": [w, h], "pixel_spacing_mm"}
//   points   CSV index,x_mm,y_mm,z_mm
//   records  JSON lines, one RegistrationRecord per line
//
// A <base> may be given with or without its extension.

#pragma once

#include <string>
#include <vector>

#include "point2/align.hpp"
#include "point2/geometry.hpp"
#include "point2/image.hpp"
#include "point2/metrics.hpp"
#include "point2/pipeline.hpp"
#include "point2/tracknet.hpp"
#include "point2/train.hpp"
#include "point2/volume.hpp"

namespace point2::io {

std::string strip_extension(const std::string& path);

void write_volume(const VoxelVolume& vol, const std::string& base);
VoxelVolume read_volume(const std::string& base);

void write_image(const Image& img, const std::string& base);
Image read_image(const std::string& base);

void write_params(const NetworkParams& params, const std::string& base);
NetworkParams read_params(const std::string& base);

std::string pose_to_json(const RigidPose& pose);
RigidPose pose_from_json(const std::string& text);
std::string geometry_to_json(const ImagingGeometry& geom);
ImagingGeometry geometry_from_json(const std::string& text);

void write_points_csv(const PointSet& pts, const std::string& path);
PointSet read_points_csv(const std::string& path);

std::string record_to_json(const RegistrationRecord& rec);
RegistrationRecord record_from_json(const std::string& line);
void write_records(const std::vector<RegistrationRecord>& recs, const std::string& path);
std::vector<RegistrationRecord> read_records(const std::string& path);

void write_metrics_csv(const MetricsSummary& m, const std::string& path);
void write_loss_curve_csv(const std::vector<LossCurveRow>& rows, const std::string& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);
void write_tracked_csv(const std::vector<TrackedPair>& pairs, const std::string& path);
std::vector<TrackedPair> read_tracked_csv(const std::string& path);

/// Writes volumes, case X-rays and case JSON files under dir plus
/// dir/manifest.json listing files, seeds and splits.
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);

std::string read_text(const std::string& path);
void write_text(const std::string& text, const std::string& path);

}  // namespace point2::io
