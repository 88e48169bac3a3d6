// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic volumes, POIs, and registration cases.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "point2/align.hpp"
#include "point2/geometry.hpp"
#include "point2/image.hpp"
#include "point2/volume.hpp"

namespace point2 {

struct PhantomSpec {
  std::array<int, 3> dims{64, 64, 64};
  double spacing_mm = 2.0;
  int n_blobs = 24;
  std::array<double, 2> soft_density{0.2, 0.6};
  std::array<double, 2> bone_density{1.2, 2.0};
  /// Share of blobs that are high-density thin structures (rods, nodules).
  double bone_fraction = 0.5;
  std::uint64_t rng_seed = 1;

  /// Upper bound of any voxel value.
  double max_density() const { return bone_density[1]; }
  void validate() const;
};

/// Soft ellipsoids plus thin dense rods and nodules; values are clamped to
/// [0, spec.max_density()]. Deterministic per seed.
VoxelVolume make_phantom(const PhantomSpec& spec);

/// A solid sphere with partial-volume voxel values (supersampled occupancy).
VoxelVolume make_sphere(std::array<int, 3> dims, double spacing_mm, double radius_mm, double density,
                        int supersample = 4);

enum class PoiStrategy { kRandom, kProvided };

struct PoiSelection {
  PoiStrategy strategy = PoiStrategy::kRandom;
  int m = 16;
  double margin_mm = 10.0;
  double threshold_fraction = 0.2;  // of the volume's max density
  std::uint64_t rng_seed = 1;
  PointSet provided;  // used by kProvided
};

/// Throws EmptySupport when no location satisfies the density threshold.
PointSet select_pois(const VoxelVolume& vol, const PoiSelection& sel);

struct CaseSpec {
  std::vector<ViewPose> views{ViewPose::anterior_posterior(), ViewPose::lateral()};
  RigidPose gt_pose;
  RigidPose initial_pose;
  double noise_fraction = 0.01;  // Gaussian sigma as a fraction of the image max
  double gamma = 1.0;            // global intensity gamma; 1 disables it
  int poi_count = 16;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Uniform offsets with |theta_k| <= max_rot_deg and |t_k| <= max_trans_mm.
RigidPose sample_offset(std::mt19937_64& rng, double max_rot_deg = 10.0, double max_trans_mm = 20.0);

struct RegistrationCase {
  RigidPose gt_pose;
  RigidPose initial_pose;
  std::vector<ViewPose> views;
  std::vector<Image> xrays;                 // per view
  std::vector<std::vector<Vec2>> gt_2d_mm;  // [view][poi]
  PointSet ct_pois;                         // volume frame
  PointSet gt_3d;                           // gt_pose applied to ct_pois
};

RegistrationCase make_case(const VoxelVolume& vol, const PointSet& ct_pois, const CaseSpec& spec,
                           const ImagingGeometry& geom, const RayIntegralConfig& ray = {});

}  // namespace point2
