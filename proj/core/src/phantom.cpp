// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "point2/errors.hpp"
#include "point2/rng.hpp"

namespace point2 {

void PhantomSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw ConfigError("phantom.dims[" + std::to_string(a) + "] must be >= 1");
  }
  if (!(spacing_mm > 0.0)) throw ConfigError("phantom.spacing_mm must be > 0");
  if (n_blobs < 0) throw ConfigError("phantom.n_blobs must be >= 0");
  if (!(soft_density[0] >= 0.0 && soft_density[1] >= soft_density[0])) {
    throw ConfigError("phantom.soft_density must be an ordered non-negative range");
  }
  if (!(bone_density[0] >= 0.0 && bone_density[1] >= bone_density[0])) {
    throw ConfigError("phantom.bone_density must be an ordered non-negative range");
  }
  if (!(bone_fraction >= 0.0 && bone_fraction <= 1.0)) throw ConfigError("phantom.bone_fraction must be in [0, 1]");
}

namespace {

struct Blob {
  Vec3 center;
  Mat3 to_local;     // rotation into the blob frame, scaled by 1/semi-axes
  double density;
  double core;       // normalised radius where the falloff starts
  double bound_mm;   // bounding radius for culling
};

Mat3 random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  return rotation_from_euler({angle(rng), angle(rng), angle(rng)});
}

}  // namespace

VoxelVolume make_phantom(const PhantomSpec& spec) {
  spec.validate();
  VoxelVolume vol(spec.dims, spec.spacing_mm);
  if (spec.n_blobs == 0) return vol;

  auto rng = make_stream(spec.rng_seed, 0xb10b);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const Vec3 half = vol.half_extent();
  const double min_half = half.minCoeff();

  std::vector<Blob> blobs;
  for (int b = 0; b < spec.n_blobs; ++b) {
    Blob blob;
    blob.center = Vec3(uniform(-0.6, 0.6) * half.x(), uniform(-0.6, 0.6) * half.y(), uniform(-0.6, 0.6) * half.z());
    Vec3 axes;
    const double kind = unit(rng);
    if (kind >= spec.bone_fraction) {
      // Soft tissue: broad ellipsoid.
      axes = Vec3(uniform(0.12, 0.4), uniform(0.12, 0.4), uniform(0.12, 0.4)) * min_half;
      blob.density = uniform(spec.soft_density[0], spec.soft_density[1]);
      blob.core = 0.6;
    } else if (unit(rng) < 0.5) {
      // Rod: thin and long.
      const double r = uniform(1.5, 3.0) * spec.spacing_mm;
      axes = Vec3(r, r, uniform(0.25, 0.6) * min_half);
      blob.density = uniform(spec.bone_density[0], spec.bone_density[1]);
      blob.core = 0.5;
    } else {
      // Nodule: small dense sphere.
      const double r = uniform(1.5, 3.5) * spec.spacing_mm;
      axes = Vec3(r, r, r);
      blob.density = uniform(spec.bone_density[0], spec.bone_density[1]);
      blob.core = 0.5;
    }
    const Mat3 rot = random_rotation(rng);
    blob.to_local = axes.cwiseInverse().asDiagonal() * rot.transpose();
    blob.bound_mm = axes.maxCoeff();
    blobs.push_back(blob);
  }

  const float cap = static_cast<float>(spec.max_density());
  for (int k = 0; k < spec.dims[2]; ++k) {
    for (int j = 0; j < spec.dims[1]; ++j) {
      for (int i = 0; i < spec.dims[0]; ++i) {
        const Vec3 p = vol.voxel_center(i, j, k);
        double value = 0.0;
        for (const Blob& b : blobs) {
          const Vec3 rel = p - b.center;
          if (rel.squaredNorm() > b.bound_mm * b.bound_mm) continue;
          const double r = (b.to_local * rel).norm();
          if (r >= 1.0) continue;
          const double f = r <= b.core ? 1.0 : (1.0 - r) / (1.0 - b.core);
          value += b.density * f;
        }
        vol.at(i, j, k) = std::min(static_cast<float>(value), cap);
      }
    }
  }
  return vol;
}

VoxelVolume make_sphere(std::array<int, 3> dims, double spacing_mm, double radius_mm, double density,
                        int supersample) {
  VoxelVolume vol(dims, spacing_mm);
  const int s = std::max(supersample, 1);
  const double r2 = radius_mm * radius_mm;
  const double inv = 1.0 / (static_cast<double>(s) * s * s);
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 c = vol.voxel_center(i, j, k);
        // Skip voxels entirely inside or outside.
        const double reach = 0.87 * spacing_mm;
        const double dist = c.norm();
        if (dist + reach <= radius_mm) {
          vol.at(i, j, k) = static_cast<float>(density);
          continue;
        }
        if (dist - reach >= radius_mm) continue;
        int inside = 0;
        for (int a = 0; a < s; ++a) {
          for (int b = 0; b < s; ++b) {
            for (int d = 0; d < s; ++d) {
              const Vec3 q = c + spacing_mm * Vec3((a + 0.5) / s - 0.5, (b + 0.5) / s - 0.5, (d + 0.5) / s - 0.5);
              if (q.squaredNorm() <= r2) ++inside;
            }
          }
        }
        vol.at(i, j, k) = static_cast<float>(density * inside * inv);
      }
    }
  }
  return vol;
}

PointSet select_pois(const VoxelVolume& vol, const PoiSelection& sel) {
  if (sel.m < 3) throw ValidationError("POI count m must be >= 3");
  if (sel.strategy == PoiStrategy::kProvided) {
    if (sel.provided.size() < 3) throw ValidationError("provided POI set needs >= 3 points");
    return sel.provided;
  }
  const double threshold = sel.threshold_fraction * vol.max_density();
  const Vec3 half = vol.half_extent();
  const Vec3 lo = -half + Vec3::Constant(sel.margin_mm);
  const Vec3 hi = half - Vec3::Constant(sel.margin_mm);
  if ((hi - lo).minCoeff() < 0.0) throw EmptySupport("margin leaves no interior region");
  if (!(vol.max_density() > 0.0f)) throw EmptySupport("volume has no positive density");

  auto rng = make_stream(sel.rng_seed, 0x9011);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointSet out;
  const long max_tries = 200000L * sel.m;
  for (long t = 0; t < max_tries && static_cast<int>(out.size()) < sel.m; ++t) {
    const Vec3 p(lo.x() + (hi.x() - lo.x()) * unit(rng), lo.y() + (hi.y() - lo.y()) * unit(rng),
                 lo.z() + (hi.z() - lo.z()) * unit(rng));
    if (sample_trilinear(vol, p) > threshold) out.push_back(p);
  }
  if (static_cast<int>(out.size()) < sel.m) {
    throw EmptySupport("found " + std::to_string(out.size()) + " of " + std::to_string(sel.m) +
                       " POIs above the density threshold");
  }
  return out;
}

void CaseSpec::validate() const {
  if (views.size() < 2) throw ConfigError("case.views needs at least 2 views");
  gt_pose.validate();
  initial_pose.validate();
  if (!(noise_fraction >= 0.0)) throw ConfigError("case.noise_fraction must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("case.gamma must be > 0");
  if (poi_count < 3) throw ConfigError("case.poi_count must be >= 3");
}

RigidPose sample_offset(std::mt19937_64& rng, double max_rot_deg, double max_trans_mm) {
  std::uniform_real_distribution<double> rot(-max_rot_deg, max_rot_deg);
  std::uniform_real_distribution<double> trans(-max_trans_mm, max_trans_mm);
  RigidPose pose;
  for (auto& a : pose.theta_deg) a = rot(rng);
  for (int i = 0; i < 3; ++i) pose.t_mm[i] = trans(rng);
  return pose;
}

RegistrationCase make_case(const VoxelVolume& vol, const PointSet& ct_pois, const CaseSpec& spec,
                           const ImagingGeometry& geom, const RayIntegralConfig& ray) {
  spec.validate();
  geom.validate();
  RegistrationCase c;
  c.gt_pose = spec.gt_pose;
  c.initial_pose = spec.initial_pose;
  c.views = spec.views;
  c.ct_pois = ct_pois;
  const RigidTransform gt = spec.gt_pose.transform();
  for (const auto& p : ct_pois) c.gt_3d.push_back(gt.apply(p));

  auto rng = make_stream(spec.rng_seed, 0xca5e);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& view : spec.views) {
    Image xray = render_drr(vol, spec.gt_pose, view, geom, ray);
    const float top = xray.data.empty() ? 0.0f : *std::max_element(xray.data.begin(), xray.data.end());
    if (spec.gamma != 1.0 && top > 0.0f) {
      for (auto& v : xray.data) v = static_cast<float>(top * std::pow(std::max(v, 0.0f) / top, spec.gamma));
    }
    const double sigma = spec.noise_fraction * top;
    if (sigma > 0.0) {
      for (auto& v : xray.data) v = static_cast<float>(v + sigma * normal(rng));
    }
    c.xrays.push_back(std::move(xray));
    c.gt_2d_mm.push_back(project_pois(ct_pois, spec.gt_pose, view, geom));
  }
  return c;
}

}  // namespace point2
