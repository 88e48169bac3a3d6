// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion; the criteria to
// run may be listed on the command line (default: all). Exits 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "point2/align.hpp"
#include "point2/errors.hpp"
#include "point2/gradcheck.hpp"
#include "point2/metrics.hpp"
#include "point2/phantom.hpp"
#include "point2/pipeline.hpp"
#include "point2/tracknet.hpp"
#include "point2/train.hpp"
#include "point2/triangulate.hpp"
#include "point2/volume.hpp"

using namespace point2;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::vector<ViewPose> kApLat{ViewPose::anterior_posterior(), ViewPose::lateral()};

// Geodesic rotation angle in degrees, stable near zero.
double angle_between(const Mat3& a, const Mat3& b) {
  return rad2deg(2.0 * std::asin(std::min(1.0, (a - b).norm() / (2.0 * std::sqrt(2.0)))));
}

Outcome triangulation_exactness() {
  const auto t0 = Clock::now();
  const ImagingGeometry g;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-100, 100);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    std::vector<Vec2> pts;
    for (const auto& v : kApLat) pts.push_back(project_point(x, v, g));
    worst = std::max(worst, (triangulate(build_system(pts, kApLat, g)) - x).norm());
  }
  const double t = seconds_since(t0);
  return {worst < 1e-6 && t < 5.0, fmt("max error %.3g mm", worst) + fmt(", %.2f s", t)};
}

Outcome procrustes_recovery() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> a(-10, 10), tr(-20, 20), p(-50, 50);
  double rot_err = 0.0, trans_err = 0.0, det_err = 0.0;
  auto cloud = [&](double flat) {
    PointSet s;
    for (int i = 0; i < 8; ++i) s.emplace_back(p(rng), p(rng), flat * p(rng));
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    const PointSet s = cloud(1.0);
    const RigidTransform t = RigidPose{{a(rng), a(rng), a(rng)}, Vec3(tr(rng), tr(rng), tr(rng))}.transform();
    PointSet q;
    for (const auto& x : s) q.push_back(t.apply(x));
    const RigidTransform r = procrustes_rigid(s, q);
    rot_err = std::max(rot_err, (r.rotation - t.rotation).norm());
    trans_err = std::max(trans_err, (r.translation - t.translation).norm());
    det_err = std::max(det_err, std::abs(r.rotation.determinant() - 1.0));
  }
  // Near-planar clouds with noisy, sometimes mirrored targets.
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const PointSet s = cloud(1e-6);
    const RigidTransform t = RigidPose{{a(rng), a(rng), a(rng)}, Vec3(tr(rng), tr(rng), tr(rng))}.transform();
    PointSet q;
    for (const auto& x : s) q.push_back(t.apply(x) + Vec3(n(rng), n(rng), n(rng)));
    if (i % 2) {
      for (auto& x : q) x.z() = -x.z();
    }
    det_err = std::max(det_err, std::abs(procrustes_rigid(s, q).rotation.determinant() - 1.0));
  }
  return {rot_err < 1e-9 && trans_err < 1e-9 && det_err < 1e-12,
          fmt("rotation %.3g", rot_err) + fmt(", translation %.3g mm", trans_err) + fmt(", |det-1| %.3g", det_err)};
}

Outcome gradient_suites() {
  const auto t0 = Clock::now();
  const auto results = gradcheck_all({1, 2, 3});
  double worst = 0.0;
  std::string failed;
  for (const auto& r : results) {
    worst = std::max(worst, r.rel_error);
    if (!r.pass) failed += " " + r.name;
  }
  const double t = seconds_since(t0);
  std::string d = std::to_string(results.size()) + " checks, max rel error " + fmt("%.3g", worst) + fmt(", %.1f s", t);
  if (!failed.empty()) d += ", failed:" + failed;
  return {failed.empty() && t < 120.0, d};
}

Outcome drr_sphere() {
  const double r = 50.0;
  const VoxelVolume sphere = make_sphere({112, 112, 112}, 1.0, r, 1.0);
  ImagingGeometry g;
  g.det_w = g.det_h = 65;
  RayIntegralConfig ray;
  ray.step_mm = 0.5;
  const Image img = render_drr(sphere, RigidPose::identity(), ViewPose::anterior_posterior(), g, ray);
  const double centre = img.at(32, 32);
  const double centre_err = std::abs(centre - 2 * r) / (2 * r);
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> px(0, 64);
  double worst = 0.0;
  for (int checked = 0; checked < 20;) {
    const int u = px(rng), v = px(rng);
    if (u == 32 && v == 32) continue;
    const Vec3 s(0, 0, g.c_mm);
    const Vec2 d = detector_px_to_mm(Vec2(u, v), g);
    const Vec3 dir = (Vec3(d.x(), d.y(), g.c_mm - g.d_mm) - s).normalized();
    const double dist = s.cross(dir).norm();
    // Rays grazing the surface are dominated by voxel partial volume.
    if (dist > 0.85 * r) continue;
    const double chord = 2.0 * std::sqrt(r * r - dist * dist);
    worst = std::max(worst, std::abs(img.at(u, v) - chord) / chord);
    ++checked;
  }
  return {centre_err < 0.01 && worst < 0.01,
          fmt("central %.3f mm", centre) + fmt(" (%.3g rel)", centre_err) + fmt(", worst chord %.3g rel", worst)};
}

Outcome shift_property() {
  std::mt19937_64 rng(505);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<int> sh(-4, 4);
  const int c = 8, h = 32, w = 32, k = 1;
  int mismatched = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ag::Var f = ag::make_tensor({c, h, w});
    for (auto& x : f->value) x = n(rng);
    ag::Var kernel = ag::make_tensor({c, 2 * k + 1, 2 * k + 1});
    ag::Var weight = ag::make_tensor(kernel->shape);
    for (auto& x : kernel->value) x = n(rng);
    for (auto& x : weight->value) x = n(rng);
    const int dx = sh(rng), dy = sh(rng);
    ag::Var g = ag::make_tensor({c, h, w});
    for (int ch = 0; ch < c; ++ch) {
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
          const int su = u - dx, sv = v - dy;
          if (su >= 0 && su < w && sv >= 0 && sv < h) g->value[(ch * h + v) * w + u] = f->value[(ch * h + sv) * w + su];
        }
      }
    }
    const ag::Var a = poi_convolution(f, kernel, weight, true);
    const ag::Var b = poi_convolution(g, kernel, weight, true);
    const int margin = k + 4;
    for (int v = margin; v < h - margin; ++v) {
      for (int u = margin; u < w - margin; ++u) {
        if (b->value[v * w + u] != a->value[(v - dy) * w + (u - dx)]) ++mismatched;
      }
    }
  }
  return {mismatched == 0, std::to_string(mismatched) + " interior pixels differ over 50 kernels"};
}

std::vector<RegistrationRecord> oracle_records;

Outcome oracle_end_to_end() {
  DatasetSpec spec;
  spec.n_volumes = 10;
  spec.test_volumes = 1;
  spec.cases_per_volume = 10;
  spec.test_cases_per_volume = 10;
  spec.seed = 606;
  const Dataset ds = generate_dataset(spec);
  double worst_t = 0.0, worst_r = 0.0;
  oracle_records.clear();
  RegisterConfig cfg;
  cfg.render_drr = false;
  for (const auto& c : ds.cases) {
    const OracleTracker tracker(gt_pois_px(c.data, ds.spec.geom));
    const RegistrationRecord rec = evaluate_case(ds, c, tracker, cfg);
    const RegistrationResult res = register_pose(ds.volumes[c.volume], c.data.ct_pois, c.data.xrays, c.data.views,
                                                 ds.spec.geom, tracker, c.data.initial_pose, cfg);
    worst_t = std::max(worst_t, (res.est_transform.translation - c.data.gt_pose.transform().translation).norm());
    worst_r = std::max(worst_r, angle_between(res.est_transform.rotation, c.data.gt_pose.transform().rotation));
    oracle_records.push_back(rec);
  }
  const bool ok = ds.cases.size() == 100 && worst_t < 1e-6 && worst_r < 1e-6;
  return {ok, std::to_string(ds.cases.size()) + " cases" + fmt(", max translation error %.3g mm", worst_t) +
                  fmt(", max rotation error %.3g deg", worst_r)};
}

Outcome learned_end_to_end() {
  const auto t0 = Clock::now();
  DatasetSpec spec;  // 20 phantoms 64^3, 128^2 detector
  spec.n_volumes = 20;
  spec.test_volumes = 5;
  spec.test_cases_per_volume = 10;
  const Dataset ds = generate_dataset(spec);
  const TrainConfig cfg;
  TrackNetConfig net;
  net.channels = 8;
  net.kernel_radius = 1;
  const TrainResult tr = train(ds, cfg, net, [&](const LossCurveRow& r) {
    std::printf("  stage %d epoch %2d loss %.6f bce %.6f tri %.3f (%.0f s)\n", r.stage, r.epoch, r.loss, r.bce, r.tri,
                seconds_since(t0));
    std::fflush(stdout);
  });
  const auto stage1 = evaluate_split(ds, Split::kTest, NetworkTracker(tr.stage1_params, cfg.preprocess));
  const auto joint = evaluate_split(ds, Split::kTest, NetworkTracker(tr.params, cfg.preprocess));
  const MetricsSummary m1 = eval_metrics(stage1);
  const MetricsSummary m2 = eval_metrics(joint);
  const double t = seconds_since(t0);
  const bool ok = m2.count == 50 && m2.mtre_p50 <= 0.5 * m2.initial_p50 && m2.mtre_p50 <= m1.mtre_p50 && t < 3600.0;
  return {ok, std::to_string(m2.count) + " cases" + fmt(", median mTRE initial %.2f mm", m2.initial_p50) +
                  fmt(", stage 1 %.2f mm", m1.mtre_p50) + fmt(", joint %.2f mm", m2.mtre_p50) +
                  fmt(" (bound %.2f)", 0.5 * m2.initial_p50) + fmt(", GFR %.2f", m2.gfr) + fmt(", %.0f s", t)};
}

Outcome single_pass() {
  // Oracle cases plus a learned tracker with untrained weights, which
  // exercises the failure path as well.
  if (oracle_records.empty()) oracle_end_to_end();
  int bad = 0;
  for (const auto& r : oracle_records) bad += r.pose_evaluations != 1;
  DatasetSpec spec;
  spec.n_volumes = 2;
  spec.test_volumes = 1;
  spec.cases_per_volume = 5;
  spec.test_cases_per_volume = 5;
  spec.seed = 808;
  const Dataset ds = generate_dataset(spec);
  TrackNetConfig net;
  const NetworkTracker tracker({NetworkParams::init(net, 1), NetworkParams::init(net, 2)}, PreprocessConfig{});
  int failed = 0;
  for (const auto& c : ds.cases) {
    const RegistrationRecord r = evaluate_case(ds, c, tracker);
    bad += r.pose_evaluations != 1;
    failed += !r.success;
  }
  const std::size_t total = oracle_records.size() + ds.cases.size();
  return {bad == 0, std::to_string(total) + " cases (" + std::to_string(failed) + " failed registrations), " +
                        std::to_string(bad) + " with pose evaluations != 1"};
}

// Brute-force oracles, written without the library's helpers.
double oracle_percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

Outcome metrics_correctness() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> a(-10, 10), t(-20, 20), p(-80, 80), e(0.0, 25.0);
  std::uniform_int_distribution<int> count(1, 40);
  double worst = 0.0;
  auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want))); };
  for (int set = 0; set < 100; ++set) {
    const int n = count(rng);
    PointSet lm;
    for (int i = 0; i < 5; ++i) lm.emplace_back(p(rng), p(rng), p(rng));
    std::vector<RegistrationRecord> recs;
    std::vector<double> finals, initials;
    std::vector<Vec2> tracked, gt;
    double fail = 0.0, time = 0.0, pd = 0.0;
    for (int i = 0; i < n; ++i) {
      const RigidPose gp{{a(rng), a(rng), a(rng)}, Vec3(t(rng), t(rng), t(rng))};
      const RigidPose ep{{a(rng), a(rng), a(rng)}, Vec3(t(rng), t(rng), t(rng))};
      double sum = 0.0;
      for (const auto& x : lm) sum += (pose_apply(ep, x) - pose_apply(gp, x)).norm();
      const double brute = sum / static_cast<double>(lm.size());
      track(mtre(lm, ep, gp), brute);
      RegistrationRecord r;
      r.mtre_final = e(rng);
      r.mtre_initial = e(rng);
      r.time_s = e(rng) / 25.0;
      finals.push_back(r.mtre_final);
      initials.push_back(r.mtre_initial);
      fail += r.mtre_final > 10.0 ? 1.0 : 0.0;
      time += r.time_s;
      recs.push_back(r);
      const Vec2 x(p(rng), p(rng)), y(p(rng), p(rng));
      tracked.push_back(x);
      gt.push_back(y);
      pd += std::hypot(x.x() - y.x(), x.y() - y.y());
    }
    track(mpd(tracked, gt, 0.388), pd / n * 0.388);
    const MetricsSummary m = eval_metrics(recs);
    track(m.mtre_p50, oracle_percentile(finals, 50));
    track(m.mtre_p75, oracle_percentile(finals, 75));
    track(m.mtre_p95, oracle_percentile(finals, 95));
    track(m.initial_p50, oracle_percentile(initials, 50));
    track(m.gfr, fail / n);
    track(m.mean_time_s, time / n);
    track(static_cast<double>(m.count), n);
  }
  return {worst <= 1e-12, fmt("max deviation %.3g over 100 record sets", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"projection-triangulation exactness", triangulation_exactness}},
      {2, {"procrustes recovery", procrustes_recovery}},
      {3, {"gradient suites", gradient_suites}},
      {4, {"DRR physical correctness", drr_sphere}},
      {5, {"POI convolution shift property", shift_property}},
      {6, {"oracle-tracker end-to-end", oracle_end_to_end}},
      {7, {"learned end-to-end", learned_end_to_end}},
      {8, {"single-pass structure", single_pass}},
      {9, {"metrics correctness", metrics_correctness}},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (!criteria.count(k)) {
      std::fprintf(stderr, "unknown criterion %s\n", argv[i]);
      return 2;
    }
    selected.insert(k);
  }
  if (selected.empty()) {
    for (const auto& [k, _] : criteria) selected.insert(k);
  }
  bool all = true;
  for (int k : selected) {
    const auto& [name, fn] = criteria.at(k);
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d %s: %s (%s)\n", k, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
