// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/pipeline.hpp"

#include <chrono>
#include <string>

#include "point2/errors.hpp"
#include "point2/metrics.hpp"
#include "point2/rng.hpp"
#include "point2/triangulate.hpp"

namespace point2 {

std::vector<std::optional<Vec2>> NetworkTracker::track(std::size_t view, const Image& drr, const Image& xray,
                                                       const std::vector<Vec2>& drr_pois_px) const {
  if (view >= params_.size()) throw ValidationError("no network for view " + std::to_string(view));
  const NetworkParams& p = params_[view];
  const ag::Var drr_t = image_tensor(preprocess_drr(drr, pre_));
  const ag::Var xray_t = image_tensor(preprocess_xray(xray, pre_));
  const TrackOutput out = track_forward(p, drr_t, xray_t, drr_pois_px);
  std::vector<std::optional<Vec2>> tracked(drr_pois_px.size());
  for (std::size_t j = 0; j < out.heatmaps.size(); ++j) {
    if (!out.heatmaps[j]) continue;
    try {
      const ag::Var poi = heatmap_to_poi(out.heatmaps[j], p.config.window_px);
      tracked[j] = Vec2(poi->value[0], poi->value[1]);
    } catch (const DegenerateHeatmap&) {
    }
  }
  return tracked;
}

std::vector<std::optional<Vec2>> OracleTracker::track(std::size_t view, const Image&, const Image&,
                                                      const std::vector<Vec2>& drr_pois_px) const {
  if (view >= pois_.size()) throw ValidationError("oracle has no POIs for view " + std::to_string(view));
  if (pois_[view].size() != drr_pois_px.size()) throw LengthMismatch("oracle POI count differs from DRR POIs");
  return {pois_[view].begin(), pois_[view].end()};
}

RegistrationResult register_pose(const VoxelVolume& vol, const PointSet& ct_pois, const std::vector<Image>& xrays,
                                 const std::vector<ViewPose>& views, const ImagingGeometry& geom,
                                 const PoiTracker& tracker, const RigidPose& current_pose,
                                 const RegisterConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  geom.validate();
  if (views.size() < 2) throw ValidationError("registration needs at least 2 views");
  if (xrays.size() != views.size()) throw LengthMismatch("one X-ray per view is required");
  if (ct_pois.size() < 3) throw ValidationError("registration needs at least 3 CT POIs");

  RegistrationResult res;
  const std::size_t n = views.size();
  const std::size_t m = ct_pois.size();

  // The only evaluation of a candidate pose: DRRs and POI projections at the
  // current pose.
  ++res.pose_evaluations;
  std::vector<Image> drrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.render_drr) drrs[i] = render_drr(vol, current_pose, views[i], geom, cfg.ray);
    std::vector<Vec2> px;
    for (const Vec2& mm : project_pois(ct_pois, current_pose, views[i], geom)) px.push_back(detector_mm_to_px(mm, geom));
    res.drr_pois_px.push_back(std::move(px));
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto tracked = tracker.track(i, drrs[i], xrays[i], res.drr_pois_px[i]);
    if (tracked.size() != m) throw LengthMismatch("tracker returned the wrong number of POIs");
    res.tracked_px.push_back(std::move(tracked));
  }

  std::vector<RigidTransform> view_tfs;
  for (const auto& v : views) view_tfs.push_back(v.transform());
  PointSet source;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<Vec2> mm;
    for (std::size_t i = 0; i < n; ++i) {
      if (!res.tracked_px[i][j]) break;
      mm.push_back(detector_px_to_mm(*res.tracked_px[i][j], geom));
    }
    if (mm.size() != n) continue;
    try {
      res.triangulated.push_back(triangulate(build_system(mm, view_tfs, geom)));
    } catch (const RankDeficient& e) {
      throw RegistrationFailed(std::string("triangulation failed: ") + e.what());
    }
    res.survivors.push_back(static_cast<int>(j));
    source.push_back(ct_pois[j]);
  }
  if (res.survivors.size() < 3) {
    throw RegistrationFailed(std::to_string(res.survivors.size()) + " POIs survived tracking, 3 required");
  }
  try {
    res.est_transform = procrustes_rigid(source, res.triangulated);
  } catch (const DegenerateShape& e) {
    throw RegistrationFailed(std::string("alignment failed: ") + e.what());
  }
  res.est_pose = RigidPose::from_transform(res.est_transform);
  res.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split " + name);
}

void DatasetSpec::validate() const {
  phantom.validate();
  geom.validate();
  if (n_volumes < 1) throw ConfigError("dataset.n_volumes must be >= 1");
  if (test_volumes < 0 || val_volumes < 0 || test_volumes + val_volumes > n_volumes) {
    throw ConfigError("dataset.test_volumes + dataset.val_volumes must not exceed n_volumes");
  }
  if (cases_per_volume < 0 || test_cases_per_volume < 0) throw ConfigError("dataset case counts must be >= 0");
  if (poi_count < 3) throw ConfigError("dataset.poi_count must be >= 3");
  if (landmark_count < 1) throw ConfigError("dataset.landmark_count must be >= 1");
  if (!(max_rot_deg >= 0.0)) throw ConfigError("dataset.max_rot_deg must be >= 0");
  if (!(max_trans_mm >= 0.0)) throw ConfigError("dataset.max_trans_mm must be >= 0");
  if (!(noise_fraction >= 0.0)) throw ConfigError("dataset.noise_fraction must be >= 0");
  if (!(gamma_jitter >= 0.0 && gamma_jitter < 1.0)) throw ConfigError("dataset.gamma_jitter must be in [0, 1)");
}

std::vector<const DatasetCase*> Dataset::split(Split s) const {
  std::vector<const DatasetCase*> out;
  for (const auto& c : cases) {
    if (c.split == s) out.push_back(&c);
  }
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  const int first_test = spec.n_volumes - spec.test_volumes;
  const int first_val = first_test - spec.val_volumes;
  for (int v = 0; v < spec.n_volumes; ++v) {
    PhantomSpec ps = spec.phantom;
    ps.rng_seed = splitmix64(spec.seed ^ (0x5eed0000ULL + static_cast<std::uint64_t>(v)));
    ds.volume_seeds.push_back(ps.rng_seed);
    ds.volumes.push_back(make_phantom(ps));

    PoiSelection lm;
    lm.m = spec.landmark_count;
    lm.margin_mm = spec.poi_margin_mm;
    lm.rng_seed = splitmix64(ps.rng_seed ^ 0x1a4d);
    ds.landmarks.push_back(select_pois(ds.volumes.back(), lm));

    const Split split = v >= first_test ? Split::kTest : (v >= first_val ? Split::kVal : Split::kTrain);
    const int count = split == Split::kTest ? spec.test_cases_per_volume : spec.cases_per_volume;
    for (int k = 0; k < count; ++k) {
      DatasetCase dc;
      dc.volume = v;
      dc.split = split;
      dc.seed = splitmix64(ps.rng_seed + 0x1000ULL * static_cast<std::uint64_t>(k + 1));
      dc.id = "v" + std::to_string(v) + "_c" + std::to_string(k);
      auto rng = make_stream(dc.seed, 0x0ff5);

      CaseSpec cs;
      cs.gt_pose = sample_offset(rng, spec.max_rot_deg, spec.max_trans_mm);
      cs.initial_pose = RigidPose::identity();
      cs.noise_fraction = spec.noise_fraction;
      if (spec.gamma_jitter > 0.0) {
        std::uniform_real_distribution<double> g(1.0 - spec.gamma_jitter, 1.0 + spec.gamma_jitter);
        cs.gamma = g(rng);
      }
      cs.poi_count = spec.poi_count;
      cs.rng_seed = dc.seed;

      PoiSelection sel;
      sel.m = spec.poi_count;
      sel.margin_mm = spec.poi_margin_mm;
      sel.rng_seed = splitmix64(dc.seed ^ 0x9015);
      const PointSet pois = select_pois(ds.volumes.back(), sel);
      dc.data = make_case(ds.volumes.back(), pois, cs, spec.geom, spec.ray);
      ds.cases.push_back(std::move(dc));
    }
  }
  return ds;
}

std::vector<std::vector<Vec2>> gt_pois_px(const RegistrationCase& c, const ImagingGeometry& geom) {
  std::vector<std::vector<Vec2>> out;
  for (const auto& view : c.gt_2d_mm) {
    std::vector<Vec2> px;
    for (const auto& mm : view) px.push_back(detector_mm_to_px(mm, geom));
    out.push_back(std::move(px));
  }
  return out;
}

RegistrationRecord evaluate_case(const Dataset& ds, const DatasetCase& c, const PoiTracker& tracker,
                                 const RegisterConfig& cfg) {
  RegistrationRecord rec;
  rec.case_id = c.id;
  rec.gt_pose = c.data.gt_pose;
  rec.initial_pose = c.data.initial_pose;
  rec.gt_px = gt_pois_px(c.data, ds.spec.geom);
  const PointSet& landmarks = ds.landmarks.at(c.volume);
  rec.mtre_initial = mtre(landmarks, rec.initial_pose, rec.gt_pose);
  const auto start = std::chrono::steady_clock::now();
  try {
    RegisterConfig rc = cfg;
    rc.ray = ds.spec.ray;
    const RegistrationResult res = register_pose(ds.volumes.at(c.volume), c.data.ct_pois, c.data.xrays,
                                                 c.data.views, ds.spec.geom, tracker, c.data.initial_pose, rc);
    rec.est_pose = res.est_pose;
    rec.tracked_px = res.tracked_px;
    rec.triangulated = res.triangulated;
    rec.pose_evaluations = res.pose_evaluations;
    rec.mtre_final = mtre(landmarks, res.est_transform, rec.gt_pose.transform());
    rec.time_s = res.time_s;
  } catch (const RegistrationFailed& e) {
    rec.success = false;
    rec.failure = e.what();
    rec.est_pose = rec.initial_pose;
    rec.pose_evaluations = 1;
    rec.mtre_final = rec.mtre_initial;
    rec.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

}  // namespace point2
