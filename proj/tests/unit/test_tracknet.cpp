// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "point2/errors.hpp"
#include "point2/gradcheck.hpp"
#include "point2/tracknet.hpp"

using namespace point2;
using ag::Var;

namespace {

Var random_map(int c, int h, int w, std::mt19937_64& rng) {
  Var t = ag::make_tensor({c, h, w});
  std::normal_distribution<double> n;
  for (auto& v : t->value) v = n(rng);
  return t;
}

double at(const Var& t, int c, int y, int x) { return t->value[(static_cast<std::size_t>(c) * t->dim(1) + y) * t->dim(2) + x]; }

// Brute-force bilinear sample of channel c at (x, y).
double bilinear(const Var& f, int c, double x, double y) {
  const int x0 = std::min(static_cast<int>(std::floor(x)), f->dim(2) - 2);
  const int y0 = std::min(static_cast<int>(std::floor(y)), f->dim(1) - 2);
  const double tx = x - x0, ty = y - y0;
  return (1 - tx) * (1 - ty) * at(f, c, y0, x0) + tx * (1 - ty) * at(f, c, y0, x0 + 1) +
         (1 - tx) * ty * at(f, c, y0 + 1, x0) + tx * ty * at(f, c, y0 + 1, x0 + 1);
}

// Brute-force zero-padded correlation of f with the weighted kernel.
double correlate(const Var& f, const Var& k, const Var& w, int y, int x) {
  const int r = k->dim(1) / 2;
  double acc = 0.0;
  for (int c = 0; c < f->dim(0); ++c) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const int yy = y + dy, xx = x + dx;
        if (yy < 0 || xx < 0 || yy >= f->dim(1) || xx >= f->dim(2)) continue;
        acc += at(w, c, dy + r, dx + r) * at(k, c, dy + r, dx + r) * at(f, c, yy, xx);
      }
    }
  }
  return acc;
}

Image random_image(int side, std::uint64_t seed) {
  Image img(side, side, 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  for (float& v : img.data) v = static_cast<float>(u(rng));
  return img;
}

}  // namespace

TEST_CASE("feature extractor shapes and zero network") {
  TrackNetConfig cfg;
  const NetworkParams p = NetworkParams::init(cfg, 3);
  const Var f = extract_features(p, random_image(64, 1));
  CHECK(f->shape == std::vector<int>{8, 64, 64});

  cfg.norm = ag::NormMode::kPassThrough;
  const NetworkParams z = NetworkParams::zeros(cfg);
  const Var fz = extract_features(z, random_image(64, 2));
  CHECK(std::all_of(fz->value.begin(), fz->value.end(), [](double v) { return v == 0.0; }));

  CHECK_THROWS_AS(extract_features(p, random_image(60, 1)), BadShape);
  CHECK(p.parameter_count() > 0);
  CHECK(p.poi_weight()->shape == std::vector<int>{8, 3, 3});
  CHECK(p.poi_weight()->value[0] == doctest::Approx(1.0 / 72));
  CHECK_THROWS_AS(p.get("nope"), ValidationError);
}

TEST_CASE("features shift with the input by a full stride block") {
  TrackNetConfig cfg;
  cfg.norm = ag::NormMode::kPassThrough;
  const NetworkParams p = NetworkParams::init(cfg, 5);
  const int side = 64, shift = 8, margin = 16;
  Image a(side, side, 1.0), b(side, side, 1.0);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int v = 16; v < 40; ++v) {
    for (int x = 16; x < 40; ++x) {
      const float val = static_cast<float>(u(rng));
      a.at(x, v) = val;
      b.at(x + shift, v + shift) = val;
    }
  }
  const Var fa = extract_features(p, a), fb = extract_features(p, b);
  double worst = 0.0, scale = 0.0;
  for (int c = 0; c < cfg.channels; ++c) {
    for (int y = margin; y < side - margin - shift; ++y) {
      for (int x = margin; x < side - margin - shift; ++x) {
        worst = std::max(worst, std::abs(at(fa, c, y, x) - at(fb, c, y + shift, x + shift)));
        scale = std::max(scale, std::abs(at(fa, c, y, x)));
      }
    }
  }
  CHECK(worst <= 1e-4 * scale);
}

TEST_CASE("Siamese branches share weights bitwise") {
  const NetworkParams p = NetworkParams::init(TrackNetConfig{}, 9);
  const Image img = random_image(32, 4);
  const TrackOutput out = track_forward(p, image_tensor(img), image_tensor(img), {Vec2(10, 10)});
  CHECK(out.drr_features->value == out.xray_features->value);
  CHECK(extract_features(p, img)->value == out.drr_features->value);
}

TEST_CASE("FE layer examples") {
  std::mt19937_64 rng(10);
  const Var f = random_map(3, 8, 8, rng);
  const Var k0 = fe_layer(f, Vec2(5, 2), 0);
  for (int c = 0; c < 3; ++c) CHECK(k0->value[c] == at(f, c, 2, 5));
  const Var km = fe_layer(f, Vec2(4.5, 3), 0);
  for (int c = 0; c < 3; ++c) CHECK(km->value[c] == doctest::Approx(0.5 * (at(f, c, 3, 4) + at(f, c, 3, 5))));
  const Vec2 q(3.3, 4.7);
  const Var k1 = fe_layer(f, q, 1);
  REQUIRE(k1->shape == std::vector<int>{3, 3, 3});
  for (int c = 0; c < 3; ++c) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        CHECK(at(k1, c, dy + 1, dx + 1) == doctest::Approx(bilinear(f, c, q.x() + dx, q.y() + dy)).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(fe_layer(f, Vec2(0.5, 4), 1), OutOfBounds);
  CHECK_THROWS_AS(fe_layer(f, Vec2(7.0, 7.2), 0), OutOfBounds);
  // The last row and column are reachable.
  CHECK(fe_layer(f, Vec2(7.0, 7.0), 0)->value[0] == at(f, 0, 7, 7));
}

TEST_CASE("POI convolution examples") {
  std::mt19937_64 rng(11);
  const Var f = random_map(4, 12, 12, rng);
  const Var k = random_map(4, 3, 3, rng);
  const Var zero_w = ag::make_tensor({4, 3, 3}, 0.0);
  const Var m0 = poi_convolution(f, k, zero_w, true);
  CHECK(std::all_of(m0->value.begin(), m0->value.end(), [](double v) { return v == 0.0; }));

  const Var ones = ag::make_tensor({4, 3, 3}, 1.0);
  const Var m = poi_convolution(f, k, random_map(4, 3, 3, rng), false);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 12; ++x) CHECK(m->value[y * 12 + x] == doctest::Approx(correlate(f, k, ones, y, x)).epsilon(1e-12));
  }
  const Var w = random_map(4, 3, 3, rng);
  const Var mw = poi_convolution(f, k, w, true);
  CHECK(mw->value[5 * 12 + 7] == doctest::Approx(correlate(f, k, w, 5, 7)).epsilon(1e-12));

  // A copy of the kernel planted in an otherwise empty map peaks at its centre.
  const Var planted = ag::make_tensor({4, 12, 12});
  for (int c = 0; c < 4; ++c) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) planted->value[(c * 12 + 6 + dy) * 12 + 4 + dx] = at(k, c, dy + 1, dx + 1);
    }
  }
  const Var mp = poi_convolution(planted, k, ones, true);
  const auto best = std::max_element(mp->value.begin(), mp->value.end()) - mp->value.begin();
  CHECK(best == 6 * 12 + 4);

  CHECK_THROWS_AS(poi_convolution(f, random_map(3, 3, 3, rng), ones, true), ChannelMismatch);
  CHECK_THROWS_AS(poi_convolution(f, k, ag::make_tensor({4, 5, 5}), true), ShapeMismatch);
}

TEST_CASE("POI convolution shifts exactly with integer shifts") {
  std::mt19937_64 rng(12);
  const int side = 20, r = 1;
  const Var f = random_map(3, side, side, rng), k = random_map(3, 3, 3, rng), w = random_map(3, 3, 3, rng);
  for (const auto& [dx, dy] : {std::pair{2, 1}, std::pair{-3, 2}, std::pair{0, -4}}) {
    const Var g = ag::make_tensor({3, side, side});
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          const int sx = x - dx, sy = y - dy;
          if (sx >= 0 && sy >= 0 && sx < side && sy < side) g->value[(c * side + y) * side + x] = at(f, c, sy, sx);
        }
      }
    }
    const Var mf = poi_convolution(f, k, w, true), mg = poi_convolution(g, k, w, true);
    const int lo = r + 4, hi = side - r - 4;
    for (int y = lo; y < hi; ++y) {
      for (int x = lo; x < hi; ++x) CHECK(mg->value[(y + dy) * side + x + dx] == mf->value[y * side + x]);
    }
  }
}

TEST_CASE("heatmap_to_poi examples") {
  Heatmap spike(15, 11, -40.0);
  spike.at(9, 4) = 40.0;
  Vec2 p = heatmap_to_poi(spike, 20);
  CHECK(std::abs(p.x() - 9) < 0.01);
  CHECK(std::abs(p.y() - 4) < 0.01);

  Heatmap two(15, 11, -40.0);
  two.at(5, 3) = 40.0;
  two.at(7, 3) = 40.0;
  p = heatmap_to_poi(two, 4);
  CHECK(p.x() == doctest::Approx(6.0));
  CHECK(p.y() == doctest::Approx(3.0));

  // Gaussian bump centred between pixels, against a brute-force weighted mean.
  const Vec2 c(10.5, 8.0);
  Heatmap g(24, 20);
  for (int v = 0; v < 20; ++v) {
    for (int u = 0; u < 24; ++u) g.at(u, v) = 20.0 * std::exp(-((u - c.x()) * (u - c.x()) + (v - c.y()) * (v - c.y())) / 8.0) - 10.0;
  }
  const int win = 6;
  p = heatmap_to_poi(g, win);
  CHECK((p - c).norm() < 0.05);
  const auto best = std::max_element(g.data.begin(), g.data.end()) - g.data.begin();
  const int bu = static_cast<int>(best % 24), bv = static_cast<int>(best / 24);
  double s = 0, su = 0, sv = 0;
  for (int v = std::max(0, bv - win); v <= std::min(19, bv + win); ++v) {
    for (int u = std::max(0, bu - win); u <= std::min(23, bu + win); ++u) {
      const double w = 1.0 / (1.0 + std::exp(-g.at(u, v)));
      s += w;
      su += w * u;
      sv += w * v;
    }
  }
  CHECK(p.x() == doctest::Approx(su / s).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(sv / s).epsilon(1e-12));

  Heatmap dead(4, 4, -1e4);
  CHECK_THROWS_AS(heatmap_to_poi(dead, 2), DegenerateHeatmap);
}

TEST_CASE("sum of features with a zero network: bias gradient counts outputs") {
  TrackNetConfig cfg;
  cfg.depth = 2;
  cfg.norm = ag::NormMode::kPassThrough;
  const NetworkParams z = NetworkParams::zeros(cfg);
  ag::Tape tape;
  const Var f = extract_features(z, image_tensor(random_image(16, 3)), &tape);
  tape.backward(ag::sum(&tape, f));
  for (double g : z.get("head.conv.bias")->grad) CHECK(g == doctest::Approx(16.0 * 16.0));
}

TEST_CASE("tracknet and heatmap gradients match finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& r : gradcheck_tracknet(seed)) {
      INFO(r.name, " rel_error=", r.rel_error, " skipped=", r.skipped);
      CHECK(r.pass);
    }
    const auto h = gradcheck_heatmap_to_poi(seed);
    INFO(h.name, " rel_error=", h.rel_error);
    CHECK(h.pass);
  }
}

TEST_CASE("an 8x8 network passes the gradient check without normalisation") {
  GradCheckOptions opt;
  opt.h = 1e-4;
  opt.size = 8;
  opt.net.depth = 1;
  opt.net.norm = ag::NormMode::kPassThrough;
  for (const auto& r : gradcheck_tracknet(4, opt)) {
    INFO(r.name, " rel_error=", r.rel_error);
    CHECK(r.pass);
  }
}
