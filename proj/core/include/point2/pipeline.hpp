// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Single-pass registration: project CT POIs at the current pose, track them
// from each DRR into its X-ray, triangulate the tracked points, and align the
// CT POIs to the triangulated patient POIs.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "point2/align.hpp"
#include "point2/geometry.hpp"
#include "point2/image.hpp"
#include "point2/imaging.hpp"
#include "point2/phantom.hpp"
#include "point2/tracknet.hpp"
#include "point2/volume.hpp"

namespace point2 {

/// Finds the X-ray location of each DRR POI for one view. A disengaged
/// optional marks a POI the tracker could not place.
class PoiTracker {
 public:
  virtual ~PoiTracker() = default;
  virtual std::vector<std::optional<Vec2>> track(std::size_t view, const Image& drr, const Image& xray,
                                                 const std::vector<Vec2>& drr_pois_px) const = 0;
};

/// The learned tracker, one network per view.
class NetworkTracker : public PoiTracker {
 public:
  NetworkTracker(std::vector<NetworkParams> params, PreprocessConfig pre)
      : params_(std::move(params)), pre_(pre) {}
  std::vector<std::optional<Vec2>> track(std::size_t view, const Image& drr, const Image& xray,
                                         const std::vector<Vec2>& drr_pois_px) const override;
  const std::vector<NetworkParams>& params() const { return params_; }

 private:
  std::vector<NetworkParams> params_;
  PreprocessConfig pre_;
};

/// Returns known X-ray POIs verbatim; isolates the geometric pipeline from
/// tracking quality.
class OracleTracker : public PoiTracker {
 public:
  explicit OracleTracker(std::vector<std::vector<Vec2>> xray_pois_px) : pois_(std::move(xray_pois_px)) {}
  std::vector<std::optional<Vec2>> track(std::size_t view, const Image& drr, const Image& xray,
                                         const std::vector<Vec2>& drr_pois_px) const override;

 private:
  std::vector<std::vector<Vec2>> pois_;
};

struct RegisterConfig {
  RayIntegralConfig ray;
  /// Skip DRR rendering (for trackers that do not look at images).
  bool render_drr = true;
};

struct RegistrationResult {
  RigidPose est_pose;
  RigidTransform est_transform;
  std::vector<std::vector<std::optional<Vec2>>> tracked_px;  // [view][poi]
  std::vector<std::vector<Vec2>> drr_pois_px;                // [view][poi]
  std::vector<int> survivors;                                // POIs used for alignment
  PointSet triangulated;                                     // one per survivor
  int pose_evaluations = 0;
  double time_s = 0.0;
};

/// Throws RegistrationFailed when fewer than 3 POIs survive tracking, or when
/// triangulation or alignment is ill-posed.
RegistrationResult register_pose(const VoxelVolume& vol, const PointSet& ct_pois, const std::vector<Image>& xrays,
                                 const std::vector<ViewPose>& views, const ImagingGeometry& geom,
                                 const PoiTracker& tracker, const RigidPose& current_pose,
                                 const RegisterConfig& cfg = {});

struct RegistrationRecord {
  std::string case_id;
  RigidPose gt_pose;
  RigidPose est_pose;
  RigidPose initial_pose;
  std::vector<std::vector<std::optional<Vec2>>> tracked_px;  // [view][poi]
  std::vector<std::vector<Vec2>> gt_px;                      // [view][poi]
  PointSet triangulated;
  double mtre_initial = 0.0;
  double mtre_final = 0.0;
  double time_s = 0.0;
  int pose_evaluations = 0;
  bool success = true;
  std::string failure;
};

// ---------------------------------------------------------------------------
// Synthetic datasets

enum class Split { kTrain, kVal, kTest };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct DatasetSpec {
  PhantomSpec phantom;        // rng_seed is replaced per volume
  ImagingGeometry geom;
  RayIntegralConfig ray;
  int n_volumes = 20;
  int test_volumes = 5;       // the last volumes are held out
  int val_volumes = 0;
  int cases_per_volume = 8;
  int test_cases_per_volume = 10;
  int poi_count = 32;
  int landmark_count = 10;
  double poi_margin_mm = 12.0;
  double max_rot_deg = 10.0;
  double max_trans_mm = 20.0;
  double noise_fraction = 0.01;
  double gamma_jitter = 0.0;  // gamma drawn from [1 - j, 1 + j]
  std::uint64_t seed = 2024;

  void validate() const;
};

struct DatasetCase {
  std::string id;
  int volume = 0;
  Split split = Split::kTrain;
  std::uint64_t seed = 0;
  RegistrationCase data;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<VoxelVolume> volumes;
  std::vector<std::uint64_t> volume_seeds;
  std::vector<PointSet> landmarks;  // per volume, for mTRE
  std::vector<DatasetCase> cases;

  std::vector<const DatasetCase*> split(Split s) const;
};

/// Pure function of the spec: the same spec gives bitwise-identical output.
Dataset generate_dataset(const DatasetSpec& spec);

/// Registers one dataset case and scores it against its landmarks. A failed
/// registration is recorded with est_pose = initial_pose.
RegistrationRecord evaluate_case(const Dataset& ds, const DatasetCase& c, const PoiTracker& tracker,
                                 const RegisterConfig& cfg = {});

/// Ground-truth X-ray POIs in pixels, [view][poi].
std::vector<std::vector<Vec2>> gt_pois_px(const RegistrationCase& c, const ImagingGeometry& geom);

}  // namespace point2
