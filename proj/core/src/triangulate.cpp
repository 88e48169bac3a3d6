// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/triangulate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <string>

#include "point2/errors.hpp"

namespace point2 {

TriSystem build_system(const std::vector<Vec2>& pois_mm, const std::vector<RigidTransform>& views,
                       const ImagingGeometry& geom) {
  if (pois_mm.size() != views.size()) throw LengthMismatch("one POI per view is required");
  if (views.size() < 2) throw ValidationError("triangulation needs at least 2 views");
  const int n = static_cast<int>(views.size());
  TriSystem sys;
  sys.a.resize(2 * n, 3);
  sys.b.resize(2 * n);
  sys.pois_mm = pois_mm;
  sys.views = views;
  sys.d_mm = geom.d_mm;
  sys.c_mm = geom.c_mm;
  for (int i = 0; i < n; ++i) {
    const Vec2& x = pois_mm[i];
    Eigen::Matrix<double, 2, 3> dx;
    dx << geom.d_mm, 0.0, x.x(), 0.0, geom.d_mm, x.y();
    sys.a.block<2, 3>(2 * i, 0) = dx * views[i].rotation;
    sys.b.segment<2>(2 * i) = geom.c_mm * x - dx * views[i].translation;
  }
  return sys;
}

TriSystem build_system(const std::vector<Vec2>& pois_mm, const std::vector<ViewPose>& views,
                       const ImagingGeometry& geom) {
  std::vector<RigidTransform> tfs;
  tfs.reserve(views.size());
  for (const auto& v : views) tfs.push_back(v.transform());
  return build_system(pois_mm, tfs, geom);
}

namespace {

void check_rank(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd) {
  const auto& s = svd.singularValues();
  if (s.size() < 3 || !(s(2) > kRankGate * s(0))) {
    throw RankDeficient("smallest singular value " + std::to_string(s.size() < 3 ? 0.0 : s(2)) +
                        " is below 1e-8 of the largest");
  }
}

}  // namespace

Vec3 triangulate(const TriSystem& sys) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  check_rank(svd);
  const Eigen::Vector3d inv_s = svd.singularValues().cwiseInverse();
  return svd.matrixV() * inv_s.asDiagonal() * (svd.matrixU().transpose() * sys.b);
}

std::vector<Vec2> triangulate_grad(const TriSystem& sys, const Vec3& upstream) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  check_rank(svd);
  const Eigen::Vector3d inv_s = svd.singularValues().cwiseInverse();
  const Vec3 x = svd.matrixV() * inv_s.asDiagonal() * (svd.matrixU().transpose() * sys.b);
  // lambda = (A^T A)^-1 upstream via the SVD: V S^-2 V^T.
  const Vec3 lambda =
      svd.matrixV() * inv_s.cwiseProduct(inv_s).asDiagonal() * (svd.matrixV().transpose() * upstream);
  const Eigen::VectorXd residual = sys.b - sys.a * x;

  std::vector<Vec2> grads(sys.views.size());
  for (std::size_t i = 0; i < sys.views.size(); ++i) {
    const Eigen::RowVector3d r2 = sys.views[i].rotation.row(2);
    const double t2 = sys.views[i].translation.z();
    const double depth_term = sys.c_mm - t2 - r2.dot(x);
    for (int k = 0; k < 2; ++k) {
      const int row = 2 * static_cast<int>(i) + k;
      // Only row `row` of A and entry `row` of b depend on this coordinate:
      // dA_row = R_view row 2, db_row = c - t_z.
      const Vec3 dx = r2.transpose() * residual(row) + sys.a.row(row).transpose() * depth_term;
      grads[i](k) = lambda.dot(dx);
    }
  }
  return grads;
}

ag::Var triangulate_layer(const std::vector<ag::Var>& pois_px, const std::vector<RigidTransform>& views,
                          const ImagingGeometry& geom, ag::Tape* tape) {
  std::vector<Vec2> mm;
  mm.reserve(pois_px.size());
  for (const auto& p : pois_px) {
    if (!p || p->numel() != 2) throw BadShape("triangulation input must be (2) tensors");
    mm.push_back(detector_px_to_mm(Vec2(p->value[0], p->value[1]), geom));
  }
  TriSystem sys = build_system(mm, views, geom);
  const Vec3 x = triangulate(sys);
  ag::Var out = ag::make_tensor({3}, {x.x(), x.y(), x.z()});
  bool any = false;
  for (const auto& p : pois_px) any = any || p->requires_grad;
  if (tape != nullptr && any) {
    out->requires_grad = true;
    const double spacing = geom.pixel_spacing_mm;
    tape->record([pois_px, out, sys = std::move(sys), spacing] {
      if (out->grad.size() != 3) return;
      const Vec3 up(out->grad[0], out->grad[1], out->grad[2]);
      const auto g = triangulate_grad(sys, up);
      for (std::size_t i = 0; i < pois_px.size(); ++i) {
        if (!pois_px[i]->requires_grad) continue;
        auto& gp = pois_px[i]->grad_buffer();
        gp[0] += g[i].x() * spacing;
        gp[1] += g[i].y() * spacing;
      }
    });
  }
  return out;
}

void LossConfig::validate() const {
  if (!(std::isfinite(w) && w >= 0.0)) throw ConfigError("loss.w must be >= 0");
}

LossTerms point2_loss(const std::vector<std::vector<ag::Var>>& heatmaps,
                      const std::vector<std::vector<std::vector<double>>>& targets,
                      const std::vector<ag::Var>& tri_points, const std::vector<Vec3>& gt_points,
                      const LossConfig& cfg, ag::Tape* tape) {
  cfg.validate();
  if (heatmaps.size() != targets.size() || heatmaps.empty()) {
    throw ShapeMismatch("heatmap and target view counts differ");
  }
  if (tri_points.size() != gt_points.size()) throw ShapeMismatch("triangulated and ground-truth POI counts differ");
  const std::size_t n_views = heatmaps.size();
  const std::size_t m = heatmaps.front().size();

  ag::Var bce_sum;
  std::size_t maps = 0;
  for (std::size_t i = 0; i < n_views; ++i) {
    if (heatmaps[i].size() != m || targets[i].size() != m) throw ShapeMismatch("every view needs m heatmaps");
    for (std::size_t j = 0; j < m; ++j) {
      if (!heatmaps[i][j]) throw ShapeMismatch("missing heatmap");
      ag::Var term = ag::bce_with_logits_mean(tape, heatmaps[i][j], targets[i][j]);
      bce_sum = bce_sum ? ag::add(tape, bce_sum, term) : term;
      ++maps;
    }
  }
  if (maps == 0) throw ShapeMismatch("no heatmaps");
  ag::Var bce = ag::scale(tape, bce_sum, 1.0 / static_cast<double>(maps));

  LossTerms out;
  out.bce = bce->value[0];
  out.total = bce;
  if (!tri_points.empty()) {
    ag::Var tri_sum;
    for (std::size_t j = 0; j < tri_points.size(); ++j) {
      ag::Var diff = ag::sub_constant(tape, tri_points[j], {gt_points[j].x(), gt_points[j].y(), gt_points[j].z()});
      ag::Var dist = ag::l2_norm(tape, diff);
      tri_sum = tri_sum ? ag::add(tape, tri_sum, dist) : dist;
    }
    out.tri_sum = tri_sum->value[0];
    out.total = ag::add(tape, bce, ag::scale(tape, tri_sum, cfg.w / static_cast<double>(n_views)));
  }
  return out;
}

}  // namespace point2
