// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <iomanip>

#include "point2/errors.hpp"
#include "point2/gradcheck.hpp"
#include "point2/io.hpp"
#include "point2/metrics.hpp"
#include "point2/phantom.hpp"
#include "point2/pipeline.hpp"
#include "point2/train.hpp"
#include "point2/volume.hpp"

namespace point2::cli {

namespace {

std::string or_default(const std::string& value, const std::string& fallback) {
  return value.empty() ? fallback : value;
}

std::string view_file(const std::string& prefix, std::size_t view) {
  return prefix + "_view" + std::to_string(view);
}

std::vector<NetworkParams> read_view_params(const std::string& prefix, std::size_t views) {
  std::vector<NetworkParams> out;
  for (std::size_t i = 0; i < views; ++i) out.push_back(io::read_params(view_file(prefix, i)));
  return out;
}

std::size_t view_count(const Dataset& ds) {
  if (ds.cases.empty()) throw ValidationError("dataset has no cases");
  return ds.cases.front().data.views.size();
}

ViewPose parse_view(const std::string& name) {
  if (name == "ap") return ViewPose::anterior_posterior();
  if (name == "lateral") return ViewPose::lateral();
  throw ValidationError("--view must be ap or lateral, got " + name);
}

}  // namespace

void run_phantom(const RunConfig& cfg, const PhantomArgs& a, std::ostream& log) {
  PhantomSpec spec = cfg.phantom;
  if (a.seed) spec.rng_seed = *a.seed;
  const std::string out = or_default(a.out, cfg.paths.out_dir + "/phantom");
  io::write_volume(make_phantom(spec), out);
  log << "wrote " << io::strip_extension(out) << ".raw\n";
}

void run_render(const RunConfig& cfg, const RenderArgs& a, std::ostream& log) {
  if (a.volume.empty()) throw ValidationError("render needs --volume");
  const VoxelVolume vol = io::read_volume(a.volume);
  vol.validate();
  RigidPose pose;
  if (!a.pose_file.empty()) {
    pose = io::pose_from_json(io::read_text(a.pose_file));
  } else if (!a.pose_json.empty()) {
    pose = io::pose_from_json(a.pose_json);
  }
  pose.validate();
  const std::string out = or_default(a.out, cfg.paths.out_dir + "/drr");
  io::write_image(render_drr(vol, pose, parse_view(a.view), cfg.geometry, cfg.dataset.ray), out);
  log << "wrote " << io::strip_extension(out) << ".raw\n";
}

void run_dataset(const RunConfig& cfg, const DatasetArgs& a, std::ostream& log) {
  const std::string dir = or_default(a.out, cfg.paths.dataset_dir);
  const Dataset ds = generate_dataset(cfg.dataset);
  io::write_dataset(ds, dir);
  log << "wrote " << dir << "/manifest.json (" << ds.volumes.size() << " volumes, " << ds.cases.size()
      << " cases)\n";
}

void run_train(const RunConfig& cfg, const TrainArgs& a, std::ostream& log) {
  const Dataset ds = io::read_dataset(or_default(a.dataset, cfg.paths.dataset_dir));
  const std::string prefix = or_default(a.params, cfg.paths.params);
  const std::string curve = or_default(a.curve, cfg.paths.out_dir + "/loss_curve.csv");
  const TrainResult res = train(ds, cfg.train, cfg.tracknet, [&](const LossCurveRow& r) {
    log << "stage " << r.stage << " epoch " << r.epoch << " loss " << r.loss << " bce " << r.bce << " tri " << r.tri
        << '\n'
        << std::flush;
  });
  for (std::size_t i = 0; i < res.params.size(); ++i) {
    io::write_params(res.params[i], view_file(prefix, i));
    io::write_params(res.stage1_params[i], view_file(prefix + "_stage1", i));
  }
  io::write_loss_curve_csv(res.curve, curve);
  log << "wrote " << view_file(prefix, 0) << ".bin .. and " << curve << '\n';
}

void run_track(const RunConfig& cfg, const TrackArgs& a, std::ostream& log) {
  const Dataset ds = io::read_dataset(or_default(a.dataset, cfg.paths.dataset_dir));
  const auto params = read_view_params(or_default(a.params, cfg.paths.params), view_count(ds));
  const Split split = split_from_name(a.split);
  TrainConfig tc = cfg.train;
  tc.poi_strategy = PoiStrategy::kRandom;
  std::vector<TrackedPair> pairs;
  for (const auto& s : make_training_samples(ds, split, tc, params.front().config.kernel_radius)) {
    for (std::size_t v = 0; v < s.views.size(); ++v) {
      std::vector<Vec2> drr_px;
      for (int j : s.usable) drr_px.push_back(s.drr_pois_px[v][j]);
      const TrackOutput out = track_forward(params[v], s.drr[v], s.xray[v], drr_px);
      for (std::size_t k = 0; k < s.usable.size(); ++k) {
        if (!out.heatmaps[k]) continue;
        try {
          const ag::Var p = heatmap_to_poi(out.heatmaps[k], params[v].config.window_px);
          pairs.push_back({s.id, static_cast<int>(v), s.usable[k], Vec2(p->value[0], p->value[1]),
                           s.xray_pois_px[v][s.usable[k]]});
        } catch (const DegenerateHeatmap&) {
        }
      }
    }
  }
  if (pairs.empty()) throw ValidationError("no POIs could be tracked in split " + a.split);
  const std::string out = or_default(a.out, cfg.paths.out_dir + "/tracked.csv");
  io::write_tracked_csv(pairs, out);
  log << std::setprecision(6) << "mpd_mm=" << mpd_of(pairs, ds.spec.geom.pixel_spacing_mm) << " pairs=" << pairs.size()
      << " wrote " << out << '\n';
}

void run_register(const RunConfig& cfg, const RegisterArgs& a, std::ostream& log) {
  const Dataset ds = io::read_dataset(or_default(a.dataset, cfg.paths.dataset_dir));
  const Split split = split_from_name(a.split);
  std::vector<RegistrationRecord> recs;
  if (a.oracle) {
    for (const DatasetCase* c : ds.split(split)) {
      const OracleTracker tracker(gt_pois_px(c->data, ds.spec.geom));
      RegisterConfig rc;
      rc.render_drr = false;
      recs.push_back(evaluate_case(ds, *c, tracker, rc));
    }
  } else {
    const NetworkTracker tracker(read_view_params(or_default(a.params, cfg.paths.params), view_count(ds)),
                                 cfg.train.preprocess);
    recs = evaluate_split(ds, split, tracker);
  }
  const std::string out = or_default(a.out, cfg.paths.records);
  io::write_records(recs, out);
  std::size_t failed = 0;
  for (const auto& r : recs) failed += r.success ? 0 : 1;
  log << "wrote " << out << " (" << recs.size() << " records, " << failed << " failed)\n";
}

void run_eval(const RunConfig& cfg, const EvalArgs& a, std::ostream& log) {
  const std::string in = or_default(a.records, cfg.paths.records);
  const auto recs = io::read_records(in);
  if (recs.empty()) throw ValidationError("record file " + in + " is empty");
  const MetricsSummary m = eval_metrics(recs);
  const std::string out = or_default(a.out, cfg.paths.out_dir + "/metrics.csv");
  io::write_metrics_csv(m, out);
  log << std::setprecision(6) << "count=" << m.count << " mtre_p50=" << m.mtre_p50 << " mtre_p75=" << m.mtre_p75
      << " mtre_p95=" << m.mtre_p95 << " gfr=" << m.gfr << " initial_p50=" << m.initial_p50 << " wrote " << out
      << '\n';
}

void run_ablation(const RunConfig& cfg, const AblationArgs& a, std::ostream& log) {
  const Dataset ds = io::read_dataset(or_default(a.dataset, cfg.paths.dataset_dir));
  const auto rows = ablation_run(ds, default_ablation_grid(), cfg.train, cfg.tracknet);
  const std::string out = or_default(a.out, cfg.paths.out_dir + "/ablation.csv");
  io::write_ablation_csv(rows, out);
  if (!a.tracked_dir.empty()) {
    for (const auto& r : rows) {
      io::write_tracked_csv(r.tracked, a.tracked_dir + "/row" + std::to_string(r.index) + ".csv");
    }
  }
  for (const auto& r : rows) log << "row " << r.index << " mpd_mm=" << r.mpd_mm << '\n';
  log << "wrote " << out << '\n';
}

bool run_gradcheck(const RunConfig&, const GradcheckArgs& a, std::ostream& log) {
  if (a.seeds < 1) throw ValidationError("--seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int s = 1; s <= a.seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  bool ok = true;
  std::size_t count = 0;
  for (const auto& r : gradcheck_all(seeds)) {
    ++count;
    if (!r.pass) {
      ok = false;
      log << "FAIL " << r.name << " rel_error=" << r.rel_error << " skipped=" << r.skipped << "/" << r.entries << '\n';
    }
  }
  log << (ok ? "gradcheck passed" : "gradcheck failed") << " (" << count << " checks)\n";
  return ok;
}

}  // namespace point2::cli
