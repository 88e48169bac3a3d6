// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/autograd.hpp"

#include <algorithm>
#include <numeric>

#include "point2/errors.hpp"

namespace point2::ag {

std::vector<double>& TensorNode::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

namespace {

std::size_t count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 0) throw BadShape("negative extent");
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

bool has_grad(const Var& v) { return v && v->grad.size() == v->value.size(); }

void require_rank3(const Var& x, const char* what) {
  if (x->shape.size() != 3) throw BadShape(std::string(what) + " expects a (C, H, W) tensor");
}

}  // namespace

Var make_tensor(std::vector<int> shape, double fill, bool requires_grad) {
  auto t = std::make_shared<TensorNode>();
  t->value.assign(count(shape), fill);
  t->shape = std::move(shape);
  t->requires_grad = requires_grad;
  return t;
}

Var make_tensor(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  if (count(shape) != values.size()) throw BadShape("value count does not match shape");
  auto t = std::make_shared<TensorNode>();
  t->shape = std::move(shape);
  t->value = std::move(values);
  t->requires_grad = requires_grad;
  return t;
}

Var make_scalar(double v, bool requires_grad) { return make_tensor({1}, v, requires_grad); }

void Tape::backward(const Var& loss) {
  if (loss->numel() != 1) throw BadShape("backward expects a scalar loss");
  loss->grad_buffer()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

bool tracking(const Tape* tape, std::initializer_list<const Var*> inputs) {
  if (tape == nullptr) return false;
  for (const Var* v : inputs) {
    if (v && *v && (*v)->requires_grad) return true;
  }
  return false;
}

Var add(Tape* tape, const Var& a, const Var& b) {
  if (a->numel() != b->numel()) throw ShapeMismatch("add operands differ in size");
  Var out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->numel(); ++i) out->value[i] = a->value[i] + b->value[i];
  if (tracking(tape, {&a, &b})) {
    out->requires_grad = true;
    tape->record([a, b, out] {
      if (!has_grad(out)) return;
      if (a->requires_grad) {
        auto& ga = a->grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out->grad[i];
      }
      if (b->requires_grad) {
        auto& gb = b->grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += out->grad[i];
      }
    });
  }
  return out;
}

Var scale(Tape* tape, const Var& a, double s) {
  Var out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->numel(); ++i) out->value[i] = a->value[i] * s;
  if (tracking(tape, {&a})) {
    out->requires_grad = true;
    tape->record([a, out, s] {
      if (!has_grad(out)) return;
      auto& ga = a->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out->grad[i] * s;
    });
  }
  return out;
}

Var add_scalar(Tape* tape, const Var& a, const Var& b) {
  if (b->numel() != 1) throw ShapeMismatch("add_scalar needs a one-element operand");
  Var out = make_tensor(a->shape);
  const double s = b->value[0];
  for (std::size_t i = 0; i < out->numel(); ++i) out->value[i] = a->value[i] + s;
  if (tracking(tape, {&a, &b})) {
    out->requires_grad = true;
    tape->record([a, b, out] {
      if (!has_grad(out)) return;
      if (a->requires_grad) {
        auto& ga = a->grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out->grad[i];
      }
      if (b->requires_grad) b->grad_buffer()[0] += std::accumulate(out->grad.begin(), out->grad.end(), 0.0);
    });
  }
  return out;
}

Var sum(Tape* tape, const Var& a) {
  Var out = make_scalar(std::accumulate(a->value.begin(), a->value.end(), 0.0));
  if (tracking(tape, {&a})) {
    out->requires_grad = true;
    tape->record([a, out] {
      if (!has_grad(out)) return;
      auto& ga = a->grad_buffer();
      for (auto& g : ga) g += out->grad[0];
    });
  }
  return out;
}

Var mean(Tape* tape, const Var& a) {
  if (a->numel() == 0) throw BadShape("mean of an empty tensor");
  return scale(tape, sum(tape, a), 1.0 / static_cast<double>(a->numel()));
}

Var l2_norm(Tape* tape, const Var& a) {
  double sq = 0.0;
  for (double v : a->value) sq += v * v;
  const double norm = std::sqrt(sq);
  Var out = make_scalar(norm);
  if (tracking(tape, {&a})) {
    out->requires_grad = true;
    tape->record([a, out, norm] {
      // The norm is not differentiable at 0; use the zero subgradient there.
      if (!has_grad(out) || norm == 0.0) return;
      auto& ga = a->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out->grad[0] * a->value[i] / norm;
    });
  }
  return out;
}

Var sub_constant(Tape* tape, const Var& a, const std::vector<double>& c) {
  if (c.size() != a->numel()) throw ShapeMismatch("sub_constant operand size");
  Var out = make_tensor(a->shape);
  for (std::size_t i = 0; i < c.size(); ++i) out->value[i] = a->value[i] - c[i];
  if (tracking(tape, {&a})) {
    out->requires_grad = true;
    tape->record([a, out] {
      if (!has_grad(out)) return;
      auto& ga = a->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out->grad[i];
    });
  }
  return out;
}

Var conv2d(Tape* tape, const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  require_rank3(x, "conv2d");
  if (weight->shape.size() != 4) throw BadShape("conv2d weight must be (Cout, Cin, k, k)");
  const int cin = x->dim(0), h = x->dim(1), w = x->dim(2);
  const int cout = weight->dim(0), k = weight->dim(2);
  if (weight->dim(1) != cin) throw ChannelMismatch("conv2d input channels");
  if (bias && static_cast<int>(bias->numel()) != cout) throw BadShape("conv2d bias size");
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  if (oh < 1 || ow < 1) throw BadShape("conv2d output would be empty");

  Var out = make_tensor({cout, oh, ow});
  const double* xv = x->value.data();
  const double* wv = weight->value.data();
  double* ov = out->value.data();
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;

  // Valid output range [lo, hi) for a given kernel tap so the input index is in-bounds.
  auto range = [pad, stride](int tap, int in_extent, int out_extent, int& lo, int& hi) {
    lo = std::max(0, (pad - tap + stride - 1) / stride);
    hi = std::min(out_extent, (in_extent - 1 + pad - tap) / stride + 1);
    if ((in_extent - 1 + pad - tap) < 0) hi = 0;
  };

  for (int co = 0; co < cout; ++co) {
    double* op = ov + co * plane;
    const double b = bias ? bias->value[co] : 0.0;
    std::fill(op, op + plane, b);
    for (int ci = 0; ci < cin; ++ci) {
      const double* xp = xv + static_cast<std::size_t>(ci) * h * w;
      for (int ky = 0; ky < k; ++ky) {
        int ylo, yhi;
        range(ky, h, oh, ylo, yhi);
        for (int kx = 0; kx < k; ++kx) {
          int xlo, xhi;
          range(kx, w, ow, xlo, xhi);
          const double wt = wv[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx];
          if (wt == 0.0) continue;
          for (int oy = ylo; oy < yhi; ++oy) {
            const double* row = xp + static_cast<std::size_t>(oy * stride + ky - pad) * w;
            double* orow = op + static_cast<std::size_t>(oy) * ow;
            for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wt * row[ox * stride + kx - pad];
          }
        }
      }
    }
  }

  if (tracking(tape, {&x, &weight, &bias})) {
    out->requires_grad = true;
    tape->record([=] {
      if (!has_grad(out)) return;
      const double* go = out->grad.data();
      if (bias && bias->requires_grad) {
        auto& gb = bias->grad_buffer();
        for (int co = 0; co < cout; ++co) {
          const double* gp = go + co * plane;
          gb[co] += std::accumulate(gp, gp + plane, 0.0);
        }
      }
      double* gx = x->requires_grad ? x->grad_buffer().data() : nullptr;
      double* gw = weight->requires_grad ? weight->grad_buffer().data() : nullptr;
      const double* xv2 = x->value.data();
      const double* wv2 = weight->value.data();
      for (int co = 0; co < cout; ++co) {
        const double* gp = go + co * plane;
        for (int ci = 0; ci < cin; ++ci) {
          const std::size_t xoff = static_cast<std::size_t>(ci) * h * w;
          for (int ky = 0; ky < k; ++ky) {
            int ylo, yhi;
            range(ky, h, oh, ylo, yhi);
            for (int kx = 0; kx < k; ++kx) {
              int xlo, xhi;
              range(kx, w, ow, xlo, xhi);
              const std::size_t widx = ((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx;
              const double wt = wv2[widx];
              double acc = 0.0;
              for (int oy = ylo; oy < yhi; ++oy) {
                const std::size_t irow = xoff + static_cast<std::size_t>(oy * stride + ky - pad) * w;
                const double* grow = gp + static_cast<std::size_t>(oy) * ow;
                for (int ox = xlo; ox < xhi; ++ox) {
                  const std::size_t ii = irow + ox * stride + kx - pad;
                  acc += grow[ox] * xv2[ii];
                  if (gx) gx[ii] += grow[ox] * wt;
                }
              }
              if (gw) gw[widx] += acc;
            }
          }
        }
      }
    });
  }
  return out;
}

Var conv_transpose2x2(Tape* tape, const Var& x, const Var& weight, const Var& bias) {
  require_rank3(x, "conv_transpose2x2");
  if (weight->shape.size() != 4 || weight->dim(2) != 2 || weight->dim(3) != 2) {
    throw BadShape("conv_transpose2x2 weight must be (Cin, Cout, 2, 2)");
  }
  const int cin = x->dim(0), h = x->dim(1), w = x->dim(2);
  const int cout = weight->dim(1);
  if (weight->dim(0) != cin) throw ChannelMismatch("conv_transpose2x2 input channels");
  if (bias && static_cast<int>(bias->numel()) != cout) throw BadShape("conv_transpose2x2 bias size");
  const int oh = 2 * h, ow = 2 * w;
  Var out = make_tensor({cout, oh, ow});
  const std::size_t iplane = static_cast<std::size_t>(h) * w;
  const std::size_t oplane = static_cast<std::size_t>(oh) * ow;

  for (int co = 0; co < cout; ++co) {
    double* op = out->value.data() + co * oplane;
    std::fill(op, op + oplane, bias ? bias->value[co] : 0.0);
    for (int ci = 0; ci < cin; ++ci) {
      const double* xp = x->value.data() + ci * iplane;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const double wt = weight->value[((static_cast<std::size_t>(ci) * cout + co) * 2 + dy) * 2 + dx];
          if (wt == 0.0) continue;
          for (int y = 0; y < h; ++y) {
            double* orow = op + static_cast<std::size_t>(2 * y + dy) * ow + dx;
            const double* irow = xp + static_cast<std::size_t>(y) * w;
            for (int xx = 0; xx < w; ++xx) orow[2 * xx] += wt * irow[xx];
          }
        }
      }
    }
  }

  if (tracking(tape, {&x, &weight, &bias})) {
    out->requires_grad = true;
    tape->record([=] {
      if (!has_grad(out)) return;
      if (bias && bias->requires_grad) {
        auto& gb = bias->grad_buffer();
        for (int co = 0; co < cout; ++co) {
          const double* gp = out->grad.data() + co * oplane;
          gb[co] += std::accumulate(gp, gp + oplane, 0.0);
        }
      }
      double* gx = x->requires_grad ? x->grad_buffer().data() : nullptr;
      double* gw = weight->requires_grad ? weight->grad_buffer().data() : nullptr;
      for (int co = 0; co < cout; ++co) {
        const double* gp = out->grad.data() + co * oplane;
        for (int ci = 0; ci < cin; ++ci) {
          const double* xp = x->value.data() + ci * iplane;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t widx = ((static_cast<std::size_t>(ci) * cout + co) * 2 + dy) * 2 + dx;
              const double wt = weight->value[widx];
              double acc = 0.0;
              for (int y = 0; y < h; ++y) {
                const double* grow = gp + static_cast<std::size_t>(2 * y + dy) * ow + dx;
                for (int xx = 0; xx < w; ++xx) {
                  const std::size_t ii = ci * iplane + static_cast<std::size_t>(y) * w + xx;
                  acc += grow[2 * xx] * xp[static_cast<std::size_t>(y) * w + xx];
                  if (gx) gx[ii] += grow[2 * xx] * wt;
                }
              }
              if (gw) gw[widx] += acc;
            }
          }
        }
      }
    });
  }
  return out;
}

Var batch_norm(Tape* tape, const Var& x, const Var& gamma, const Var& beta, NormMode mode,
               double eps) {
  require_rank3(x, "batch_norm");
  if (mode == NormMode::kPassThrough) return x;
  const int c = x->dim(0);
  if (static_cast<int>(gamma->numel()) != c || static_cast<int>(beta->numel()) != c) {
    throw ChannelMismatch("batch_norm affine parameters");
  }
  const std::size_t n = static_cast<std::size_t>(x->dim(1)) * x->dim(2);
  Var out = make_tensor(x->shape);
  std::vector<double> xhat(x->numel());
  std::vector<double> inv_std(c);
  for (int ch = 0; ch < c; ++ch) {
    const double* xp = x->value.data() + ch * n;
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += xp[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xp[i] - mu) * (xp[i] - mu);
    var /= static_cast<double>(n);
    inv_std[ch] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) {
      xhat[ch * n + i] = (xp[i] - mu) * inv_std[ch];
      out->value[ch * n + i] = gamma->value[ch] * xhat[ch * n + i] + beta->value[ch];
    }
  }
  if (tracking(tape, {&x, &gamma, &beta})) {
    out->requires_grad = true;
    tape->record([x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std), c, n] {
      if (!has_grad(out)) return;
      for (int ch = 0; ch < c; ++ch) {
        const double* g = out->grad.data() + ch * n;
        const double* xh = xhat.data() + ch * n;
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          sum_g += g[i];
          sum_gx += g[i] * xh[i];
        }
        if (gamma->requires_grad) gamma->grad_buffer()[ch] += sum_gx;
        if (beta->requires_grad) beta->grad_buffer()[ch] += sum_g;
        if (x->requires_grad) {
          double* gx = x->grad_buffer().data() + ch * n;
          const double gm = gamma->value[ch];
          const double k = gm * inv_std[ch] / static_cast<double>(n);
          for (std::size_t i = 0; i < n; ++i) {
            gx[i] += k * (static_cast<double>(n) * g[i] - sum_g - xh[i] * sum_gx);
          }
        }
      }
    });
  }
  return out;
}

Var leaky_relu(Tape* tape, const Var& x, double slope) {
  Var out = make_tensor(x->shape);
  for (std::size_t i = 0; i < x->numel(); ++i) {
    const double v = x->value[i];
    out->value[i] = v > 0.0 ? v : slope * v;
  }
  if (tracking(tape, {&x})) {
    out->requires_grad = true;
    tape->record([x, out, slope] {
      if (!has_grad(out)) return;
      auto& gx = x->grad_buffer();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += out->grad[i] * (x->value[i] > 0.0 ? 1.0 : slope);
      }
    });
  }
  return out;
}

Var relu(Tape* tape, const Var& x) { return leaky_relu(tape, x, 0.0); }

Var concat_channels(Tape* tape, const Var& a, const Var& b) {
  require_rank3(a, "concat_channels");
  require_rank3(b, "concat_channels");
  if (a->dim(1) != b->dim(1) || a->dim(2) != b->dim(2)) {
    throw ShapeMismatch("concat_channels spatial sizes differ");
  }
  Var out = make_tensor({a->dim(0) + b->dim(0), a->dim(1), a->dim(2)});
  std::copy(a->value.begin(), a->value.end(), out->value.begin());
  std::copy(b->value.begin(), b->value.end(), out->value.begin() + a->numel());
  if (tracking(tape, {&a, &b})) {
    out->requires_grad = true;
    tape->record([a, b, out] {
      if (!has_grad(out)) return;
      if (a->requires_grad) {
        auto& ga = a->grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out->grad[i];
      }
      if (b->requires_grad) {
        auto& gb = b->grad_buffer();
        const std::size_t off = a->numel();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += out->grad[off + i];
      }
    });
  }
  return out;
}

Var bce_with_logits_mean(Tape* tape, const Var& logits, const std::vector<double>& target) {
  if (target.size() != logits->numel()) throw ShapeMismatch("BCE target size differs from logits");
  if (target.empty()) throw ShapeMismatch("BCE of an empty map");
  const double inv_n = 1.0 / static_cast<double>(target.size());
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double z = logits->value[i];
    // -[p log s(z) + (1-p) log(1-s(z))] in a form that never overflows.
    total += std::max(z, 0.0) - z * target[i] + std::log1p(std::exp(-std::abs(z)));
  }
  Var out = make_scalar(total * inv_n);
  if (tracking(tape, {&logits})) {
    out->requires_grad = true;
    tape->record([logits, out, target, inv_n] {
      if (!has_grad(out)) return;
      auto& g = logits->grad_buffer();
      const double up = out->grad[0] * inv_n;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += up * (sigmoid(logits->value[i]) - target[i]);
    });
  }
  return out;
}

}  // namespace point2::ag
