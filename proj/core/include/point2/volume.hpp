// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Voxel volumes and DRR rendering by ray casting.
//
// The volume centre coincides with the isocenter at identity pose. Voxel
// (i, j, k) has its centre at ((i - (nx-1)/2) s, (j - (ny-1)/2) s,
// (k - (nz-1)/2) s) and the data are stored x-fastest.

#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "point2/geometry.hpp"
#include "point2/image.hpp"

namespace point2 {

struct VoxelVolume {
  std::array<int, 3> dims{1, 1, 1};
  double spacing_mm = 1.0;
  std::vector<float> data;

  VoxelVolume() = default;
  VoxelVolume(std::array<int, 3> d, double spacing, float fill = 0.0f);

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  float& at(int i, int j, int k) { return data[index(i, j, k)]; }
  float at(int i, int j, int k) const { return data[index(i, j, k)]; }

  Vec3 voxel_center(int i, int j, int k) const;
  /// Half-extent of the voxel-boundary box along each axis.
  Vec3 half_extent() const;
  float max_density() const;

  /// Throws ValidationError on bad dims, spacing, or densities.
  void validate() const;
};

/// Trilinear interpolation of the voxel grid at p (volume frame, mm).
/// Voxels beyond the grid read as 0, so the result falls to 0 outside the
/// bounding box.
double sample_trilinear(const VoxelVolume& vol, const Vec3& p);

struct RayIntegralConfig {
  double step_mm = 0.0;  // <= 0 selects half the voxel spacing

  double resolved_step(const VoxelVolume& vol) const {
    return step_mm > 0.0 ? step_mm : 0.5 * vol.spacing_mm;
  }
};

/// Line integral of density along the source-to-pixel segment for every
/// detector pixel. Sample points are mapped into the volume frame by
/// (view * pose)^-1 and marched with a midpoint rule, the segment clipped to
/// the volume's bounding sphere.
Image render_drr(const VoxelVolume& vol, const RigidPose& pose, const ViewPose& view,
                 const ImagingGeometry& geom, const RayIntegralConfig& cfg = {});

/// Same, through an explicit volume-to-imaging-frame transform.
Image render_drr(const VoxelVolume& vol, const RigidTransform& volume_to_view,
                 const ImagingGeometry& geom, const RayIntegralConfig& cfg = {});

/// Projects volume-frame POIs under a pose. A degenerate POI raises
/// DegenerateProjection carrying its index.
std::vector<Vec2> project_pois(const std::vector<Vec3>& pois, const RigidPose& pose,
                               const ViewPose& view, const ImagingGeometry& geom);

}  // namespace point2
