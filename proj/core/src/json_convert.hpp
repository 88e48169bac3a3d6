// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// JSON conversion of the config and pose structs, shared by io.cpp and
// config.cpp. Readers take defaults for missing keys and throw ConfigError
// naming the key on a type mismatch.

#pragma once

#include <string>

#include <json.hpp>

#include "point2/errors.hpp"
#include "point2/geometry.hpp"
#include "point2/phantom.hpp"
#include "point2/pipeline.hpp"
#include "point2/tracknet.hpp"
#include "point2/train.hpp"
#include "point2/triangulate.hpp"

namespace point2::detail {

using json = nlohmann::json;

template <class T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

inline json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + " must be an array of 3 numbers");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception&) {
    throw ConfigError(where + " must be an array of 3 numbers");
  }
}

inline json to_json(const RigidPose& p) {
  return {{"theta_deg", json::array({p.theta_deg[0], p.theta_deg[1], p.theta_deg[2]})},
          {"t_mm", vec3_json(p.t_mm)}};
}

inline RigidPose pose_from(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("theta_deg") || !j.contains("t_mm")) {
    throw ConfigError(where + " needs theta_deg and t_mm");
  }
  RigidPose p;
  const Vec3 th = vec3_from(j.at("theta_deg"), where + ".theta_deg");
  p.theta_deg = {th.x(), th.y(), th.z()};
  p.t_mm = vec3_from(j.at("t_mm"), where + ".t_mm");
  return p;
}

inline json to_json(const ImagingGeometry& g) {
  return {{"d_mm", g.d_mm},
          {"c_mm", g.c_mm},
          {"det_px", json::array({g.det_w, g.det_h})},
          {"pixel_spacing_mm", g.pixel_spacing_mm}};
}

inline ImagingGeometry geometry_from(const json& j, const std::string& where) {
  ImagingGeometry g;
  read_field(j, "d_mm", g.d_mm, where);
  read_field(j, "c_mm", g.c_mm, where);
  read_field(j, "pixel_spacing_mm", g.pixel_spacing_mm, where);
  if (j.is_object() && j.contains("det_px")) {
    const json& d = j.at("det_px");
    if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer()) {
      throw ConfigError(where + ".det_px must be [width, height]");
    }
    g.det_w = d[0].get<int>();
    g.det_h = d[1].get<int>();
  }
  return g;
}

inline json to_json(const PhantomSpec& s) {
  return {{"dims", s.dims},
          {"spacing_mm", s.spacing_mm},
          {"n_blobs", s.n_blobs},
          {"soft_density", s.soft_density},
          {"bone_density", s.bone_density},
          {"bone_fraction", s.bone_fraction},
          {"rng_seed", s.rng_seed}};
}

inline PhantomSpec phantom_from(const json& j, const std::string& where) {
  PhantomSpec s;
  read_field(j, "dims", s.dims, where);
  read_field(j, "spacing_mm", s.spacing_mm, where);
  read_field(j, "n_blobs", s.n_blobs, where);
  read_field(j, "soft_density", s.soft_density, where);
  read_field(j, "bone_density", s.bone_density, where);
  read_field(j, "bone_fraction", s.bone_fraction, where);
  read_field(j, "rng_seed", s.rng_seed, where);
  return s;
}

inline json to_json(const DatasetSpec& s) {
  return {{"phantom", to_json(s.phantom)},
          {"geometry", to_json(s.geom)},
          {"ray_step_mm", s.ray.step_mm},
          {"n_volumes", s.n_volumes},
          {"test_volumes", s.test_volumes},
          {"val_volumes", s.val_volumes},
          {"cases_per_volume", s.cases_per_volume},
          {"test_cases_per_volume", s.test_cases_per_volume},
          {"poi_count", s.poi_count},
          {"landmark_count", s.landmark_count},
          {"poi_margin_mm", s.poi_margin_mm},
          {"max_rot_deg", s.max_rot_deg},
          {"max_trans_mm", s.max_trans_mm},
          {"noise_fraction", s.noise_fraction},
          {"gamma_jitter", s.gamma_jitter},
          {"seed", s.seed}};
}

/// Phantom and geometry are read from their own sections by the caller.
inline DatasetSpec dataset_from(const json& j, const std::string& where) {
  DatasetSpec s;
  if (j.is_object() && j.contains("phantom")) s.phantom = phantom_from(j.at("phantom"), where + ".phantom");
  if (j.is_object() && j.contains("geometry")) s.geom = geometry_from(j.at("geometry"), where + ".geometry");
  read_field(j, "ray_step_mm", s.ray.step_mm, where);
  read_field(j, "n_volumes", s.n_volumes, where);
  read_field(j, "test_volumes", s.test_volumes, where);
  read_field(j, "val_volumes", s.val_volumes, where);
  read_field(j, "cases_per_volume", s.cases_per_volume, where);
  read_field(j, "test_cases_per_volume", s.test_cases_per_volume, where);
  read_field(j, "poi_count", s.poi_count, where);
  read_field(j, "landmark_count", s.landmark_count, where);
  read_field(j, "poi_margin_mm", s.poi_margin_mm, where);
  read_field(j, "max_rot_deg", s.max_rot_deg, where);
  read_field(j, "max_trans_mm", s.max_trans_mm, where);
  read_field(j, "noise_fraction", s.noise_fraction, where);
  read_field(j, "gamma_jitter", s.gamma_jitter, where);
  read_field(j, "seed", s.seed, where);
  return s;
}

inline const char* norm_name(ag::NormMode m) { return m == ag::NormMode::kBatch ? "batch" : "none"; }

inline json to_json(const TrackNetConfig& c) {
  return {{"depth", c.depth},
          {"base_channels", c.base_channels},
          {"channels", c.channels},
          {"kernel_radius", c.kernel_radius},
          {"use_weight", c.use_weight},
          {"norm", norm_name(c.norm)},
          {"leaky_slope", c.leaky_slope},
          {"window_px", c.window_px}};
}

inline TrackNetConfig tracknet_from(const json& j, const std::string& where) {
  TrackNetConfig c;
  read_field(j, "depth", c.depth, where);
  read_field(j, "base_channels", c.base_channels, where);
  read_field(j, "channels", c.channels, where);
  read_field(j, "kernel_radius", c.kernel_radius, where);
  read_field(j, "use_weight", c.use_weight, where);
  read_field(j, "leaky_slope", c.leaky_slope, where);
  read_field(j, "window_px", c.window_px, where);
  std::string norm = norm_name(c.norm);
  read_field(j, "norm", norm, where);
  if (norm == "batch") {
    c.norm = ag::NormMode::kBatch;
  } else if (norm == "none") {
    c.norm = ag::NormMode::kPassThrough;
  } else {
    throw ConfigError(where + ".norm must be \"batch\" or \"none\"");
  }
  return c;
}

inline const char* strategy_name(PoiStrategy s) { return s == PoiStrategy::kProvided ? "provided" : "random"; }

inline PoiStrategy strategy_from(const std::string& s, const std::string& where) {
  if (s == "random") return PoiStrategy::kRandom;
  if (s == "provided") return PoiStrategy::kProvided;
  throw ConfigError(where + " must be \"random\" or \"provided\"");
}

inline json to_json(const TrainConfig& c) {
  return {{"stage1_epochs", c.stage1_epochs},
          {"stage2_epochs", c.stage2_epochs},
          {"lr1", c.lr1},
          {"lr2", c.lr2},
          {"batch_size", c.batch_size},
          {"poi_batch", c.poi_batch},
          {"w", c.w},
          {"sigma_px", c.sigma_px},
          {"poi_strategy", strategy_name(c.poi_strategy)},
          {"seed", c.seed},
          {"bins", c.preprocess.bins},
          {"invert_xray", c.preprocess.invert_xray}};
}

inline TrainConfig train_from(const json& j, const std::string& where) {
  TrainConfig c;
  read_field(j, "stage1_epochs", c.stage1_epochs, where);
  read_field(j, "stage2_epochs", c.stage2_epochs, where);
  read_field(j, "lr1", c.lr1, where);
  read_field(j, "lr2", c.lr2, where);
  read_field(j, "batch_size", c.batch_size, where);
  read_field(j, "poi_batch", c.poi_batch, where);
  read_field(j, "w", c.w, where);
  read_field(j, "sigma_px", c.sigma_px, where);
  read_field(j, "seed", c.seed, where);
  read_field(j, "bins", c.preprocess.bins, where);
  read_field(j, "invert_xray", c.preprocess.invert_xray, where);
  std::string strategy = strategy_name(c.poi_strategy);
  read_field(j, "poi_strategy", strategy, where);
  c.poi_strategy = strategy_from(strategy, where + ".poi_strategy");
  return c;
}

}  // namespace point2::detail
