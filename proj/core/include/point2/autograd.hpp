// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// A small reverse-mode gradient engine over dense double tensors.
//
// Tensors are shared nodes; every differentiable op takes an optional Tape.
// When a tape is given and any input requires a gradient, the op records a
// closure that pushes the output gradient back into its inputs. Gradients
// accumulate, so parameters shared between two branches receive the sum.
// A tape is single-threaded; forward passes without a tape are pure.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace point2::ag {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until touched by backward
  bool requires_grad = false;

  std::size_t numel() const { return value.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  /// Allocates a zero gradient buffer on first use.
  std::vector<double>& grad_buffer();
  void zero_grad() { grad.assign(value.size(), 0.0); }
};

using Var = std::shared_ptr<TensorNode>;

Var make_tensor(std::vector<int> shape, double fill = 0.0, bool requires_grad = false);
Var make_tensor(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
Var make_scalar(double v, bool requires_grad = false);

class Tape {
 public:
  void record(std::function<void()> backward) { ops_.push_back(std::move(backward)); }
  /// Seeds d(loss)/d(loss) = 1 and runs recorded closures in reverse.
  void backward(const Var& loss);
  void clear() { ops_.clear(); }
  std::size_t size() const { return ops_.size(); }

 private:
  std::vector<std::function<void()>> ops_;
};

/// True when the op should record onto the tape.
bool tracking(const Tape* tape, std::initializer_list<const Var*> inputs);

// Elementwise and reductions.
Var add(Tape* tape, const Var& a, const Var& b);
Var scale(Tape* tape, const Var& a, double s);
/// a + b with b a one-element tensor broadcast over a.
Var add_scalar(Tape* tape, const Var& a, const Var& b);
Var sum(Tape* tape, const Var& a);
Var mean(Tape* tape, const Var& a);
Var l2_norm(Tape* tape, const Var& a);
Var sub_constant(Tape* tape, const Var& a, const std::vector<double>& c);

// Layers on (C, H, W) tensors.

/// weight (Cout, Cin, k, k), bias (Cout); zero padding.
Var conv2d(Tape* tape, const Var& x, const Var& weight, const Var& bias, int stride, int pad);
/// Stride-2, 2x2 transposed convolution. weight (Cin, Cout, 2, 2), bias (Cout).
Var conv_transpose2x2(Tape* tape, const Var& x, const Var& weight, const Var& bias);

enum class NormMode {
  kPassThrough,  // identity, for deterministic unit tests
  kBatch,        // per-channel statistics over the batch (here: one image)
};
/// gamma, beta: (C).
Var batch_norm(Tape* tape, const Var& x, const Var& gamma, const Var& beta, NormMode mode,
               double eps = 1e-5);
Var leaky_relu(Tape* tape, const Var& x, double slope);
Var relu(Tape* tape, const Var& x);
Var concat_channels(Tape* tape, const Var& a, const Var& b);

/// Mean over elements of the logistic loss between sigmoid(logits) and the
/// target probabilities.
Var bce_with_logits_mean(Tape* tape, const Var& logits, const std::vector<double>& target);

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace point2::ag

