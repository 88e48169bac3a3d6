// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <utility>

#include "point2/errors.hpp"
#include "point2/metrics.hpp"
#include "point2/rng.hpp"

namespace point2 {

void TrainConfig::validate() const {
  if (stage1_epochs < 0 || stage2_epochs < 0) throw ConfigError("train epochs must be >= 0");
  if (!(lr1 > 0.0)) throw ConfigError("train.lr1 must be > 0");
  if (!(lr2 > 0.0)) throw ConfigError("train.lr2 must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (poi_batch < 1) throw ConfigError("train.poi_batch must be >= 1");
  if (!(w >= 0.0)) throw ConfigError("train.w must be >= 0");
  if (!(sigma_px > 0.0)) throw ConfigError("train.sigma_px must be > 0");
  if (preprocess.bins < 2) throw ConfigError("train.bins must be >= 2");
}

namespace {

bool inside(const Vec2& p, int w, int h, double margin) {
  return p.x() >= margin && p.y() >= margin && p.x() <= w - 1 - margin && p.y() <= h - 1 - margin;
}

// DRRs at the initial pose, shared by all cases of a volume.
class DrrCache {
 public:
  DrrCache(const Dataset& ds, const PreprocessConfig& pre) : ds_(ds), pre_(pre) {}

  const ag::Var& get(int volume, std::size_t view, const RigidPose& pose, const ViewPose& vp) {
    const auto key = std::make_tuple(volume, view, pose.theta_deg, std::array<double, 3>{pose.t_mm.x(), pose.t_mm.y(), pose.t_mm.z()});
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const Image drr = render_drr(ds_.volumes.at(volume), pose, vp, ds_.spec.geom, ds_.spec.ray);
    return cache_.emplace(key, image_tensor(preprocess_drr(drr, pre_))).first->second;
  }

 private:
  using Key = std::tuple<int, std::size_t, std::array<double, 3>, std::array<double, 3>>;
  const Dataset& ds_;
  PreprocessConfig pre_;
  std::map<Key, ag::Var> cache_;
};

std::vector<int> pick_pois(const TrainingSample& s, const TrainConfig& cfg, std::mt19937_64& rng) {
  std::vector<int> pool = s.usable;
  if (cfg.poi_strategy == PoiStrategy::kProvided) return pool;
  std::shuffle(pool.begin(), pool.end(), rng);
  if (static_cast<int>(pool.size()) > cfg.poi_batch) pool.resize(cfg.poi_batch);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void sgd_step(NetworkParams& p, double lr, double scale) {
  for (auto& t : p.tensors) {
    if (t->grad.size() != t->value.size()) continue;
    for (std::size_t i = 0; i < t->value.size(); ++i) t->value[i] -= lr * scale * t->grad[i];
  }
}

void check_finite(const SampleLoss& l, const std::string& id, int stage, int epoch) {
  if (!std::isfinite(l.terms.total->value[0])) {
    throw NonFiniteLoss("stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) + " sample " + id +
                        ": loss " + std::to_string(l.terms.total->value[0]) + " (bce " +
                        std::to_string(l.terms.bce) + ", tri " + std::to_string(l.terms.tri_sum) + ")");
  }
}

}  // namespace

std::vector<TrainingSample> make_training_samples(const Dataset& ds, Split split, const TrainConfig& cfg,
                                                  int kernel_radius) {
  DrrCache drrs(ds, cfg.preprocess);
  const ImagingGeometry& geom = ds.spec.geom;
  const double margin = kernel_radius + 1.0;
  std::vector<TrainingSample> out;
  for (const DatasetCase* c : ds.split(split)) {
    TrainingSample s;
    s.id = c->id;
    const PointSet& pool = cfg.poi_strategy == PoiStrategy::kProvided ? ds.landmarks.at(c->volume) : c->data.ct_pois;
    const RigidTransform gt = c->data.gt_pose.transform();
    for (const auto& p : pool) s.gt_3d.push_back(gt.apply(p));
    for (std::size_t i = 0; i < c->data.views.size(); ++i) {
      const ViewPose& vp = c->data.views[i];
      s.views.push_back(vp.transform());
      s.drr.push_back(drrs.get(c->volume, i, c->data.initial_pose, vp));
      s.xray.push_back(image_tensor(preprocess_xray(c->data.xrays[i], cfg.preprocess)));
      std::vector<Vec2> dp, xp;
      for (const auto& mm : project_pois(pool, c->data.initial_pose, vp, geom)) dp.push_back(detector_mm_to_px(mm, geom));
      for (const auto& mm : project_pois(pool, c->data.gt_pose, vp, geom)) xp.push_back(detector_mm_to_px(mm, geom));
      s.drr_pois_px.push_back(std::move(dp));
      s.xray_pois_px.push_back(std::move(xp));
    }
    for (std::size_t j = 0; j < pool.size(); ++j) {
      bool ok = true;
      for (std::size_t i = 0; i < s.views.size() && ok; ++i) {
        ok = inside(s.drr_pois_px[i][j], geom.det_w, geom.det_h, margin) &&
             inside(s.xray_pois_px[i][j], geom.det_w, geom.det_h, 0.0);
      }
      if (ok) s.usable.push_back(static_cast<int>(j));
    }
    if (!s.usable.empty()) out.push_back(std::move(s));
  }
  return out;
}

SampleLoss sample_loss(const std::vector<const NetworkParams*>& params, const TrainingSample& sample,
                       const std::vector<int>& views, const std::vector<int>& pois, double w, double sigma_px,
                       const ImagingGeometry& geom, ag::Tape* tape) {
  if (views.empty() || pois.empty()) throw ValidationError("sample_loss needs views and POIs");
  std::vector<std::vector<ag::Var>> heatmaps;
  std::vector<std::vector<std::vector<double>>> targets;
  std::vector<std::vector<Vec2>> drr_px(views.size());
  for (std::size_t a = 0; a < views.size(); ++a) {
    for (int j : pois) drr_px[a].push_back(sample.drr_pois_px.at(views[a]).at(j));
  }
  for (std::size_t a = 0; a < views.size(); ++a) {
    const int v = views[a];
    const NetworkParams& p = *params.at(v);
    TrackOutput out = track_forward(p, sample.drr[v], sample.xray[v], drr_px[a], tape);
    std::vector<std::vector<double>> tv;
    for (std::size_t k = 0; k < pois.size(); ++k) {
      if (!out.heatmaps[k]) throw OutOfBounds("training POI " + std::to_string(pois[k]) + " leaves the DRR");
      tv.push_back(gaussian_target(sample.xray_pois_px[v][pois[k]], sigma_px, geom.det_w, geom.det_h).data);
    }
    heatmaps.push_back(std::move(out.heatmaps));
    targets.push_back(std::move(tv));
  }

  std::vector<ag::Var> tri;
  std::vector<Vec3> gt;
  if (w > 0.0 && views.size() >= 2) {
    std::vector<RigidTransform> tfs;
    for (int v : views) tfs.push_back(sample.views.at(v));
    const int window = params.at(views[0])->config.window_px;
    for (std::size_t k = 0; k < pois.size(); ++k) {
      std::vector<ag::Var> px;
      try {
        for (std::size_t a = 0; a < views.size(); ++a) px.push_back(heatmap_to_poi(heatmaps[a][k], window, tape));
        tri.push_back(triangulate_layer(px, tfs, geom, tape));
        gt.push_back(sample.gt_3d.at(pois[k]));
      } catch (const DegenerateHeatmap&) {
      } catch (const RankDeficient&) {
      }
    }
  }
  SampleLoss out;
  out.terms = point2_loss(heatmaps, targets, tri, gt, LossConfig{w}, tape);
  out.tri_points = static_cast<int>(tri.size());
  return out;
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg, const TrackNetConfig& net, const TrainProgress& progress) {
  cfg.validate();
  net.validate();
  const std::vector<TrainingSample> samples = make_training_samples(ds, Split::kTrain, cfg, net.kernel_radius);
  if (samples.empty()) throw ValidationError("dataset has no usable training samples");
  const std::size_t n_views = samples.front().views.size();
  const ImagingGeometry& geom = ds.spec.geom;

  TrainResult result;
  std::vector<NetworkParams> params;
  for (std::size_t v = 0; v < n_views; ++v) params.push_back(NetworkParams::init(net, splitmix64(cfg.seed + 31 * v)));
  std::vector<const NetworkParams*> ptrs;
  for (const auto& p : params) ptrs.push_back(&p);

  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  // Stage 1: each view alone, tracking loss only.
  for (int epoch = 1; epoch <= cfg.stage1_epochs; ++epoch) {
    LossCurveRow row{epoch, 1, 0.0, 0.0, 0.0};
    std::size_t count = 0;
    for (std::size_t v = 0; v < n_views; ++v) {
      auto rng = make_stream(cfg.seed, 0x51000000ULL + 1000ULL * epoch + v);
      std::vector<std::size_t> order(samples.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::size_t end = std::min(order.size(), start + bs);
        params[v].zero_grad();
        for (std::size_t k = start; k < end; ++k) {
          const TrainingSample& s = samples[order[k]];
          ag::Tape tape;
          const SampleLoss l =
              sample_loss(ptrs, s, {static_cast<int>(v)}, pick_pois(s, cfg, rng), 0.0, cfg.sigma_px, geom, &tape);
          check_finite(l, s.id, 1, epoch);
          tape.backward(l.terms.total);
          row.loss += l.terms.total->value[0];
          row.bce += l.terms.bce;
          ++count;
        }
        sgd_step(params[v], cfg.lr1, 1.0 / static_cast<double>(end - start));
      }
    }
    row.loss /= static_cast<double>(count);
    row.bce /= static_cast<double>(count);
    result.curve.push_back(row);
    if (progress) progress(row);
  }
  for (const auto& p : params) result.stage1_params.push_back(p.clone());

  // Stage 2: all views jointly through the triangulation layer.
  std::vector<int> all_views(n_views);
  std::iota(all_views.begin(), all_views.end(), 0);
  for (int epoch = 1; epoch <= cfg.stage2_epochs; ++epoch) {
    LossCurveRow row{epoch, 2, 0.0, 0.0, 0.0};
    auto rng = make_stream(cfg.seed, 0x52000000ULL + 1000ULL * epoch);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      for (auto& p : params) p.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const TrainingSample& s = samples[order[k]];
        ag::Tape tape;
        const SampleLoss l = sample_loss(ptrs, s, all_views, pick_pois(s, cfg, rng), cfg.w, cfg.sigma_px, geom, &tape);
        check_finite(l, s.id, 2, epoch);
        tape.backward(l.terms.total);
        row.loss += l.terms.total->value[0];
        row.bce += l.terms.bce;
        row.tri += l.terms.tri_sum;
      }
      for (auto& p : params) sgd_step(p, cfg.lr2, 1.0 / static_cast<double>(end - start));
    }
    row.loss /= static_cast<double>(samples.size());
    row.bce /= static_cast<double>(samples.size());
    row.tri /= static_cast<double>(samples.size());
    result.curve.push_back(row);
    if (progress) progress(row);
  }
  result.params = std::move(params);
  return result;
}

std::vector<RegistrationRecord> evaluate_split(const Dataset& ds, Split split, const PoiTracker& tracker,
                                               const RegisterConfig& cfg) {
  std::vector<RegistrationRecord> out;
  for (const DatasetCase* c : ds.split(split)) out.push_back(evaluate_case(ds, *c, tracker, cfg));
  return out;
}

std::vector<AblationSetting> default_ablation_grid() {
  return {
      {0, PoiStrategy::kRandom, true},
      {1, PoiStrategy::kRandom, true},
      {2, PoiStrategy::kRandom, true},
      {1, PoiStrategy::kProvided, true},
      {1, PoiStrategy::kRandom, false},
  };
}

double mpd_of(const std::vector<TrackedPair>& pairs, double pixel_spacing_mm) {
  std::vector<Vec2> a, b;
  for (const auto& p : pairs) {
    a.push_back(p.tracked_px);
    b.push_back(p.gt_px);
  }
  return mpd(a, b, pixel_spacing_mm);
}

std::vector<AblationRow> ablation_run(const Dataset& ds, const std::vector<AblationSetting>& grid,
                                      const TrainConfig& cfg, const TrackNetConfig& net) {
  std::vector<AblationRow> rows;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const AblationSetting& setting = grid[r];
    TrackNetConfig nc = net;
    nc.kernel_radius = setting.kernel_radius;
    nc.use_weight = setting.use_weight;
    TrainConfig tc = cfg;
    tc.poi_strategy = setting.strategy;
    tc.stage2_epochs = 0;
    const TrainResult trained = train(ds, tc, nc);

    AblationRow row;
    row.index = static_cast<int>(r) + 1;
    row.setting = setting;
    // Evaluation always tracks the test cases' own POIs.
    TrainConfig eval_cfg = tc;
    eval_cfg.poi_strategy = PoiStrategy::kRandom;
    const auto tests = make_training_samples(ds, Split::kTest, eval_cfg, nc.kernel_radius);
    for (const auto& s : tests) {
      for (std::size_t v = 0; v < s.views.size(); ++v) {
        std::vector<Vec2> drr_px;
        for (int j : s.usable) drr_px.push_back(s.drr_pois_px[v][j]);
        const TrackOutput out = track_forward(trained.params[v], s.drr[v], s.xray[v], drr_px);
        for (std::size_t k = 0; k < s.usable.size(); ++k) {
          if (!out.heatmaps[k]) continue;
          try {
            const ag::Var p = heatmap_to_poi(out.heatmaps[k], nc.window_px);
            row.tracked.push_back({s.id, static_cast<int>(v), s.usable[k], Vec2(p->value[0], p->value[1]),
                                   s.xray_pois_px[v][s.usable[k]]});
          } catch (const DegenerateHeatmap&) {
          }
        }
      }
    }
    row.mpd_mm = mpd_of(row.tracked, ds.spec.geom.pixel_spacing_mm);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace point2
