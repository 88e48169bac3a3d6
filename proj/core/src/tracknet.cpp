// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/tracknet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "point2/errors.hpp"
#include "point2/rng.hpp"

namespace point2 {

using ag::Tape;
using ag::Var;

int TrackNetConfig::encoder_channels(int level) const {
  const int mult = std::min(1 << std::max(level - 1, 0), 4);
  return base_channels * mult;
}

void TrackNetConfig::validate() const {
  if (depth < 1 || depth > 6) throw ConfigError("tracknet.depth must be in [1, 6]");
  if (base_channels < 1) throw ConfigError("tracknet.base_channels must be >= 1");
  if (channels < 1) throw ConfigError("tracknet.channels must be >= 1");
  if (kernel_radius < 0) throw ConfigError("tracknet.kernel_radius must be >= 0");
  if (window_px < 1) throw ConfigError("tracknet.window_px must be >= 1");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("tracknet.leaky_slope must be in [0, 1)");
}

namespace {

struct LayerSpec {
  std::string name;
  std::vector<int> shape;
  enum Kind { kWeight, kBias, kGamma, kBeta, kPoiWeight, kPoiBias } kind;
  int fan_in = 1;
};

int decoder_out_channels(const TrackNetConfig& cfg, int level) {
  return level >= 2 ? cfg.encoder_channels(level - 1) : cfg.base_channels;
}

int decoder_in_channels(const TrackNetConfig& cfg, int level) {
  if (level == cfg.depth) return cfg.encoder_channels(cfg.depth);
  return decoder_out_channels(cfg, level + 1) + cfg.encoder_channels(level);
}

std::vector<LayerSpec> layer_specs(const TrackNetConfig& cfg) {
  std::vector<LayerSpec> specs;
  for (int l = 1; l <= cfg.depth; ++l) {
    const int in = l == 1 ? 1 : cfg.encoder_channels(l - 1);
    const int out = cfg.encoder_channels(l);
    const std::string p = "enc" + std::to_string(l);
    specs.push_back({p + ".bn.gamma", {in}, LayerSpec::kGamma});
    specs.push_back({p + ".bn.beta", {in}, LayerSpec::kBeta});
    specs.push_back({p + ".conv.weight", {out, in, 3, 3}, LayerSpec::kWeight, in * 9});
    specs.push_back({p + ".conv.bias", {out}, LayerSpec::kBias});
  }
  for (int l = cfg.depth; l >= 1; --l) {
    const int in = decoder_in_channels(cfg, l);
    const int out = decoder_out_channels(cfg, l);
    const std::string p = "dec" + std::to_string(l);
    specs.push_back({p + ".bn.gamma", {in}, LayerSpec::kGamma});
    specs.push_back({p + ".bn.beta", {in}, LayerSpec::kBeta});
    specs.push_back({p + ".deconv.weight", {in, out, 2, 2}, LayerSpec::kWeight, in});
    specs.push_back({p + ".deconv.bias", {out}, LayerSpec::kBias});
  }
  const int head_in = decoder_out_channels(cfg, 1) + 1;
  specs.push_back({"head.conv.weight", {cfg.channels, head_in, 3, 3}, LayerSpec::kWeight, head_in * 9});
  specs.push_back({"head.conv.bias", {cfg.channels}, LayerSpec::kBias});
  specs.push_back({"head.bn.gamma", {cfg.channels}, LayerSpec::kGamma});
  specs.push_back({"head.bn.beta", {cfg.channels}, LayerSpec::kBeta});
  const int side = 2 * cfg.kernel_radius + 1;
  specs.push_back({"poi.weight", {cfg.channels, side, side}, LayerSpec::kPoiWeight});
  specs.push_back({"poi.bias", {1}, LayerSpec::kPoiBias});
  return specs;
}

}  // namespace

NetworkParams NetworkParams::init(const TrackNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  NetworkParams p;
  p.config = cfg;
  auto rng = make_stream(seed, 0x7e11);
  for (const auto& spec : layer_specs(cfg)) {
    Var t = ag::make_tensor(spec.shape, 0.0, true);
    switch (spec.kind) {
      case LayerSpec::kWeight: {
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / spec.fan_in));
        for (auto& v : t->value) v = normal(rng);
        break;
      }
      case LayerSpec::kGamma:
        std::fill(t->value.begin(), t->value.end(), 1.0);
        break;
      case LayerSpec::kPoiWeight:
        // Averages rather than sums the kernel products, keeping initial
        // heatmap logits O(1).
        std::fill(t->value.begin(), t->value.end(), 1.0 / static_cast<double>(t->numel()));
        break;
      case LayerSpec::kPoiBias:
        t->value[0] = kHeatmapPriorLogit;
        break;
      case LayerSpec::kBias:
      case LayerSpec::kBeta:
        break;
    }
    p.names.push_back(spec.name);
    p.tensors.push_back(t);
  }
  return p;
}

NetworkParams NetworkParams::zeros(const TrackNetConfig& cfg) {
  cfg.validate();
  NetworkParams p;
  p.config = cfg;
  for (const auto& spec : layer_specs(cfg)) {
    p.names.push_back(spec.name);
    p.tensors.push_back(ag::make_tensor(spec.shape, 0.0, true));
  }
  return p;
}

const Var& NetworkParams::get(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw ValidationError("unknown parameter " + name);
}

NetworkParams NetworkParams::clone() const {
  NetworkParams p;
  p.config = config;
  p.names = names;
  for (const auto& t : tensors) p.tensors.push_back(ag::make_tensor(t->shape, t->value, t->requires_grad));
  return p;
}

void NetworkParams::zero_grad() {
  for (auto& t : tensors) t->zero_grad();
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t->numel();
  return n;
}

Var image_tensor(const Image& img) {
  std::vector<double> values(img.data.begin(), img.data.end());
  return ag::make_tensor({1, img.height, img.width}, std::move(values));
}

Var extract_features(const NetworkParams& params, const Var& image, Tape* tape) {
  const auto& cfg = params.config;
  if (image->shape.size() != 3 || image->dim(0) != 1) throw BadShape("input must be (1, H, W)");
  const int unit = 1 << cfg.depth;
  if (image->dim(1) % unit != 0 || image->dim(2) % unit != 0) {
    throw BadShape("image sides must be multiples of " + std::to_string(unit));
  }
  std::vector<Var> skips{image};
  Var cur = image;
  for (int l = 1; l <= cfg.depth; ++l) {
    const std::string p = "enc" + std::to_string(l);
    cur = ag::batch_norm(tape, cur, params.get(p + ".bn.gamma"), params.get(p + ".bn.beta"), cfg.norm);
    cur = ag::conv2d(tape, cur, params.get(p + ".conv.weight"), params.get(p + ".conv.bias"), 2, 1);
    cur = ag::leaky_relu(tape, cur, cfg.leaky_slope);
    skips.push_back(cur);
  }
  for (int l = cfg.depth; l >= 1; --l) {
    const std::string p = "dec" + std::to_string(l);
    cur = ag::batch_norm(tape, cur, params.get(p + ".bn.gamma"), params.get(p + ".bn.beta"), cfg.norm);
    cur = ag::conv_transpose2x2(tape, cur, params.get(p + ".deconv.weight"), params.get(p + ".deconv.bias"));
    cur = ag::relu(tape, cur);
    cur = ag::concat_channels(tape, cur, skips[l - 1]);
  }
  cur = ag::conv2d(tape, cur, params.get("head.conv.weight"), params.get("head.conv.bias"), 1, 1);
  // Zero-mean output channels, so POI correlation responds to matching
  // structure rather than to local feature energy.
  return ag::batch_norm(tape, cur, params.get("head.bn.gamma"), params.get("head.bn.beta"), cfg.norm);
}

Var extract_features(const NetworkParams& params, const Image& image) {
  return extract_features(params, image_tensor(image), nullptr);
}

namespace {

// Bilinear footprint of one sample: base pixel and fractional offsets.
struct Tap {
  int x0, y0;
  double tx, ty;
};

Tap bilinear_tap(double x, double y, int w, int h, int dx, int dy) {
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) {
    throw OutOfBounds("kernel offset (" + std::to_string(dx) + ", " + std::to_string(dy) +
                      ") samples outside the feature map");
  }
  Tap t{static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y)), 0.0, 0.0};
  t.x0 = std::min(t.x0, std::max(w - 2, 0));
  t.y0 = std::min(t.y0, std::max(h - 2, 0));
  t.tx = x - t.x0;
  t.ty = y - t.y0;
  return t;
}

}  // namespace

Var fe_layer(const Var& fmap, const Var& poi, int radius, Tape* tape) {
  if (fmap->shape.size() != 3) throw BadShape("fe_layer expects a (C, H, W) map");
  if (poi->numel() != 2) throw BadShape("fe_layer POI must have 2 components");
  if (radius < 0) throw ValidationError("kernel radius must be >= 0");
  const int c = fmap->dim(0), h = fmap->dim(1), w = fmap->dim(2);
  const int side = 2 * radius + 1;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const double u = poi->value[0], v = poi->value[1];

  std::vector<Tap> taps;
  taps.reserve(static_cast<std::size_t>(side) * side);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) taps.push_back(bilinear_tap(u + dx, v + dy, w, h, dx, dy));
  }

  auto fetch = [&](const double* f, int x, int y) -> double {
    return (x < w && y < h) ? f[static_cast<std::size_t>(y) * w + x] : 0.0;
  };

  Var out = ag::make_tensor({c, side, side});
  for (int ch = 0; ch < c; ++ch) {
    const double* f = fmap->value.data() + ch * plane;
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const Tap& t = taps[k];
      const double top = fetch(f, t.x0, t.y0) * (1 - t.tx) + fetch(f, t.x0 + 1, t.y0) * t.tx;
      const double bot = fetch(f, t.x0, t.y0 + 1) * (1 - t.tx) + fetch(f, t.x0 + 1, t.y0 + 1) * t.tx;
      out->value[ch * taps.size() + k] = top * (1 - t.ty) + bot * t.ty;
    }
  }

  if (ag::tracking(tape, {&fmap, &poi})) {
    out->requires_grad = true;
    tape->record([fmap, poi, out, taps, c, h, w, plane] {
      if (out->grad.size() != out->value.size()) return;
      double* gf = fmap->requires_grad ? fmap->grad_buffer().data() : nullptr;
      double du = 0.0, dv = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const double* f = fmap->value.data() + ch * plane;
        for (std::size_t k = 0; k < taps.size(); ++k) {
          const double g = out->grad[ch * taps.size() + k];
          if (g == 0.0) continue;
          const Tap& t = taps[k];
          const int x1 = t.x0 + 1, y1 = t.y0 + 1;
          const bool okx = x1 < w, oky = y1 < h;
          auto at = [&](int x, int y) { return f[static_cast<std::size_t>(y) * w + x]; };
          const double f00 = at(t.x0, t.y0);
          const double f10 = okx ? at(x1, t.y0) : 0.0;
          const double f01 = oky ? at(t.x0, y1) : 0.0;
          const double f11 = (okx && oky) ? at(x1, y1) : 0.0;
          du += g * ((1 - t.ty) * (f10 - f00) + t.ty * (f11 - f01));
          dv += g * ((1 - t.tx) * (f01 - f00) + t.tx * (f11 - f10));
          if (gf) {
            double* gp = gf + ch * plane;
            gp[static_cast<std::size_t>(t.y0) * w + t.x0] += g * (1 - t.tx) * (1 - t.ty);
            if (okx) gp[static_cast<std::size_t>(t.y0) * w + x1] += g * t.tx * (1 - t.ty);
            if (oky) gp[static_cast<std::size_t>(y1) * w + t.x0] += g * (1 - t.tx) * t.ty;
            if (okx && oky) gp[static_cast<std::size_t>(y1) * w + x1] += g * t.tx * t.ty;
          }
        }
      }
      if (poi->requires_grad) {
        auto& gp = poi->grad_buffer();
        gp[0] += du;
        gp[1] += dv;
      }
    });
  }
  return out;
}

Var fe_layer(const Var& fmap, const Vec2& poi_px, int radius) {
  return fe_layer(fmap, ag::make_tensor({2}, {poi_px.x(), poi_px.y()}), radius, nullptr);
}

Var poi_convolution(const Var& fmap_x, const Var& kernel, const Var& weight, bool use_weight, Tape* tape) {
  if (fmap_x->shape.size() != 3 || kernel->shape.size() != 3) throw BadShape("poi_convolution expects (C, H, W)");
  const int c = fmap_x->dim(0), h = fmap_x->dim(1), w = fmap_x->dim(2);
  if (kernel->dim(0) != c) throw ChannelMismatch("kernel has " + std::to_string(kernel->dim(0)) +
                                                 " channels, feature map has " + std::to_string(c));
  const int side = kernel->dim(1);
  if (kernel->dim(2) != side || side % 2 == 0) throw BadShape("kernel must be square with odd side");
  if (use_weight && weight->shape != kernel->shape) throw ShapeMismatch("POI weight shape differs from kernel");
  const int r = side / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t kplane = static_cast<std::size_t>(side) * side;

  std::vector<double> wk(kernel->numel());
  for (std::size_t i = 0; i < wk.size(); ++i) wk[i] = kernel->value[i] * (use_weight ? weight->value[i] : 1.0);

  Var out = ag::make_tensor({1, h, w});
  double* ov = out->value.data();
  for (int ch = 0; ch < c; ++ch) {
    const double* f = fmap_x->value.data() + ch * plane;
    for (int dy = -r; dy <= r; ++dy) {
      const int vlo = std::max(0, -dy), vhi = std::min(h, h - dy);
      for (int dx = -r; dx <= r; ++dx) {
        const double k = wk[ch * kplane + (dy + r) * side + (dx + r)];
        if (k == 0.0) continue;
        const int ulo = std::max(0, -dx), uhi = std::min(w, w - dx);
        for (int v = vlo; v < vhi; ++v) {
          const double* frow = f + static_cast<std::size_t>(v + dy) * w + dx;
          double* orow = ov + static_cast<std::size_t>(v) * w;
          for (int u = ulo; u < uhi; ++u) orow[u] += k * frow[u];
        }
      }
    }
  }

  if (ag::tracking(tape, {&fmap_x, &kernel, use_weight ? &weight : nullptr})) {
    out->requires_grad = true;
    tape->record([fmap_x, kernel, weight, use_weight, out, wk = std::move(wk), c, h, w, side, r, plane, kplane] {
      if (out->grad.size() != out->value.size()) return;
      const double* go = out->grad.data();
      double* gf = fmap_x->requires_grad ? fmap_x->grad_buffer().data() : nullptr;
      std::vector<double> gwk(wk.size(), 0.0);
      for (int ch = 0; ch < c; ++ch) {
        const double* f = fmap_x->value.data() + ch * plane;
        for (int dy = -r; dy <= r; ++dy) {
          const int vlo = std::max(0, -dy), vhi = std::min(h, h - dy);
          for (int dx = -r; dx <= r; ++dx) {
            const std::size_t ki = ch * kplane + (dy + r) * side + (dx + r);
            const double k = wk[ki];
            const int ulo = std::max(0, -dx), uhi = std::min(w, w - dx);
            double acc = 0.0;
            for (int v = vlo; v < vhi; ++v) {
              const std::size_t frow = static_cast<std::size_t>(v + dy) * w + dx;
              const double* grow = go + static_cast<std::size_t>(v) * w;
              for (int u = ulo; u < uhi; ++u) {
                acc += grow[u] * f[frow + u];
                if (gf) gf[ch * plane + frow + u] += grow[u] * k;
              }
            }
            gwk[ki] = acc;
          }
        }
      }
      if (kernel->requires_grad) {
        auto& gk = kernel->grad_buffer();
        for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += gwk[i] * (use_weight ? weight->value[i] : 1.0);
      }
      if (use_weight && weight->requires_grad) {
        auto& gw = weight->grad_buffer();
        for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += gwk[i] * kernel->value[i];
      }
    });
  }
  return out;
}

namespace {

struct Window {
  int u0, u1, v0, v1;  // inclusive bounds
};

Window argmax_window(const double* m, int h, int w, int radius) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const std::size_t best = static_cast<std::size_t>(std::max_element(m, m + n) - m);
  const int bu = static_cast<int>(best % w), bv = static_cast<int>(best / w);
  return {std::max(0, bu - radius), std::min(w - 1, bu + radius), std::max(0, bv - radius),
          std::min(h - 1, bv + radius)};
}

}  // namespace

Var heatmap_to_poi(const Var& heatmap, int window_px, Tape* tape) {
  if (window_px < 1) throw ValidationError("window_px must be >= 1");
  if (heatmap->shape.size() != 3 || heatmap->dim(0) != 1) throw BadShape("heatmap must be (1, H, W)");
  const int h = heatmap->dim(1), w = heatmap->dim(2);
  const double* m = heatmap->value.data();
  const Window win = argmax_window(m, h, w, window_px);
  double s = 0.0, su = 0.0, sv = 0.0;
  for (int v = win.v0; v <= win.v1; ++v) {
    for (int u = win.u0; u <= win.u1; ++u) {
      const double p = ag::sigmoid(m[static_cast<std::size_t>(v) * w + u]);
      s += p;
      su += p * u;
      sv += p * v;
    }
  }
  if (!(s >= 1e-12)) throw DegenerateHeatmap("sigmoid mass in the window is below 1e-12");
  const double cu = su / s, cv = sv / s;
  Var out = ag::make_tensor({2}, {cu, cv});
  if (ag::tracking(tape, {&heatmap})) {
    out->requires_grad = true;
    tape->record([heatmap, out, win, w, s, cu, cv] {
      if (out->grad.size() != 2) return;
      auto& g = heatmap->grad_buffer();
      const double gu = out->grad[0], gv = out->grad[1];
      for (int v = win.v0; v <= win.v1; ++v) {
        for (int u = win.u0; u <= win.u1; ++u) {
          const std::size_t i = static_cast<std::size_t>(v) * w + u;
          const double p = ag::sigmoid(heatmap->value[i]);
          const double dp = p * (1.0 - p) / s;
          g[i] += dp * (gu * (u - cu) + gv * (v - cv));
        }
      }
    });
  }
  return out;
}

Vec2 heatmap_to_poi(const Heatmap& heatmap, int window_px) {
  Var t = ag::make_tensor({1, heatmap.height, heatmap.width}, heatmap.data);
  Var out = heatmap_to_poi(t, window_px, nullptr);
  return {out->value[0], out->value[1]};
}

Heatmap to_heatmap(const Var& map) {
  if (map->shape.size() != 3 || map->dim(0) != 1) throw BadShape("heatmap must be (1, H, W)");
  Heatmap out(map->dim(2), map->dim(1));
  out.data = map->value;
  return out;
}

Var heatmap_logits(const NetworkParams& params, const Var& fmap_x, const Var& kernel, Tape* tape) {
  const Var m = poi_convolution(fmap_x, kernel, params.poi_weight(), params.config.use_weight, tape);
  return ag::add_scalar(tape, m, params.get("poi.bias"));
}

TrackOutput track_forward(const NetworkParams& params, const Var& drr, const Var& xray,
                          const std::vector<Vec2>& drr_pois_px, Tape* tape) {
  TrackOutput out;
  out.drr_features = extract_features(params, drr, tape);
  out.xray_features = extract_features(params, xray, tape);
  out.heatmaps.reserve(drr_pois_px.size());
  const int radius = params.config.kernel_radius;
  for (const Vec2& p : drr_pois_px) {
    Var kernel;
    try {
      kernel = fe_layer(out.drr_features, ag::make_tensor({2}, {p.x(), p.y()}), radius, tape);
    } catch (const OutOfBounds&) {
      out.heatmaps.emplace_back();
      continue;
    }
    out.heatmaps.push_back(heatmap_logits(params, out.xray_features, kernel, tape));
  }
  return out;
}

}  // namespace point2
