// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace point2 {

/// Row-major float image; (u, v) = (column, row).
struct Image {
  int width = 0;
  int height = 0;
  double pixel_spacing_mm = 1.0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, double spacing, float fill = 0.0f)
      : width(w), height(h), pixel_spacing_mm(spacing),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  float& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  float at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  std::size_t size() const { return data.size(); }
};

}  // namespace point2
