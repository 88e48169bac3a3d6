// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "point2/errors.hpp"
#include "point2/parallel.hpp"

namespace point2 {

VoxelVolume::VoxelVolume(std::array<int, 3> d, double spacing, float fill)
    : dims(d), spacing_mm(spacing) {
  if (d[0] < 1 || d[1] < 1 || d[2] < 1) throw ValidationError("volume dims must be >= 1");
  data.assign(static_cast<std::size_t>(d[0]) * d[1] * d[2], fill);
}

Vec3 VoxelVolume::voxel_center(int i, int j, int k) const {
  return {(i - 0.5 * (dims[0] - 1)) * spacing_mm, (j - 0.5 * (dims[1] - 1)) * spacing_mm,
          (k - 0.5 * (dims[2] - 1)) * spacing_mm};
}

Vec3 VoxelVolume::half_extent() const {
  return {0.5 * dims[0] * spacing_mm, 0.5 * dims[1] * spacing_mm, 0.5 * dims[2] * spacing_mm};
}

float VoxelVolume::max_density() const {
  return data.empty() ? 0.0f : *std::max_element(data.begin(), data.end());
}

void VoxelVolume::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw ValidationError("dims[" + std::to_string(a) + "] must be >= 1");
  }
  if (!(std::isfinite(spacing_mm) && spacing_mm > 0.0)) {
    throw ValidationError("spacing_mm must be > 0");
  }
  if (data.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]) {
    throw ValidationError("data size does not match dims");
  }
  for (float v : data) {
    if (!std::isfinite(v) || v < 0.0f) throw ValidationError("densities must be finite and >= 0");
  }
}

double sample_trilinear(const VoxelVolume& vol, const Vec3& p) {
  const double inv = 1.0 / vol.spacing_mm;
  const double fx = p.x() * inv + 0.5 * (vol.dims[0] - 1);
  const double fy = p.y() * inv + 0.5 * (vol.dims[1] - 1);
  const double fz = p.z() * inv + 0.5 * (vol.dims[2] - 1);
  if (!(fx > -1.0 && fy > -1.0 && fz > -1.0 && fx < vol.dims[0] && fy < vol.dims[1] &&
        fz < vol.dims[2])) {
    return 0.0;
  }
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int z0 = static_cast<int>(std::floor(fz));
  const double tx = fx - x0, ty = fy - y0, tz = fz - z0;

  auto value = [&](int i, int j, int k) -> double {
    if (i < 0 || j < 0 || k < 0 || i >= vol.dims[0] || j >= vol.dims[1] || k >= vol.dims[2]) {
      return 0.0;
    }
    return vol.data[vol.index(i, j, k)];
  };

  const double c00 = value(x0, y0, z0) * (1 - tx) + value(x0 + 1, y0, z0) * tx;
  const double c10 = value(x0, y0 + 1, z0) * (1 - tx) + value(x0 + 1, y0 + 1, z0) * tx;
  const double c01 = value(x0, y0, z0 + 1) * (1 - tx) + value(x0 + 1, y0, z0 + 1) * tx;
  const double c11 = value(x0, y0 + 1, z0 + 1) * (1 - tx) + value(x0 + 1, y0 + 1, z0 + 1) * tx;
  const double c0 = c00 * (1 - ty) + c10 * ty;
  const double c1 = c01 * (1 - ty) + c11 * ty;
  return c0 * (1 - tz) + c1 * tz;
}

Image render_drr(const VoxelVolume& vol, const RigidTransform& volume_to_view,
                 const ImagingGeometry& geom, const RayIntegralConfig& cfg) {
  geom.validate();
  const double step = cfg.resolved_step(vol);
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidGeometry("step_mm must be > 0");

  Image img(geom.det_w, geom.det_h, geom.pixel_spacing_mm);
  const RigidTransform to_volume = volume_to_view.inverse();
  const Vec3 source = to_volume.apply(Vec3(0.0, 0.0, geom.c_mm));
  // Interpolated density is nonzero up to one voxel past the outer centres.
  const Vec3 reach = vol.half_extent() + Vec3::Constant(0.5 * vol.spacing_mm);
  const double radius = reach.norm();
  const double detector_z = geom.c_mm - geom.d_mm;

  parallel_for(static_cast<std::size_t>(geom.det_h), [&](std::size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < geom.det_w; ++u) {
      const Vec2 x_mm = detector_px_to_mm(Vec2(u, v), geom);
      const Vec3 target = to_volume.apply(Vec3(x_mm.x(), x_mm.y(), detector_z));
      const Vec3 seg = target - source;
      const double length = seg.norm();
      const Vec3 dir = seg / length;
      // Clip [0, length] to the bounding sphere centred at the volume origin.
      const double b = source.dot(dir);
      const double disc = b * b - (source.squaredNorm() - radius * radius);
      if (disc <= 0.0) continue;
      const double root = std::sqrt(disc);
      const double t0 = std::max(0.0, -b - root);
      const double t1 = std::min(length, -b + root);
      if (t1 <= t0) continue;
      const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step)));
      const double h = (t1 - t0) / n;
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        sum += sample_trilinear(vol, source + dir * (t0 + (k + 0.5) * h));
      }
      img.at(u, v) = static_cast<float>(sum * h);
    }
  });
  return img;
}

Image render_drr(const VoxelVolume& vol, const RigidPose& pose, const ViewPose& view,
                 const ImagingGeometry& geom, const RayIntegralConfig& cfg) {
  return render_drr(vol, view.transform() * pose.transform(), geom, cfg);
}

std::vector<Vec2> project_pois(const std::vector<Vec3>& pois, const RigidPose& pose,
                               const ViewPose& view, const ImagingGeometry& geom) {
  const RigidTransform placed = pose.transform();
  const RigidTransform tv = view.transform();
  std::vector<Vec2> out;
  out.reserve(pois.size());
  for (std::size_t i = 0; i < pois.size(); ++i) {
    try {
      out.push_back(project_point(placed.apply(pois[i]), tv, geom));
    } catch (const DegenerateProjection&) {
      throw DegenerateProjection("POI index " + std::to_string(i) + " lies in the source plane");
    }
  }
  return out;
}

}  // namespace point2
