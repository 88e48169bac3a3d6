// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace point2 {

/// Worker count from POINT2_THREADS; 0 or unset means hardware concurrency.
int worker_count();

/// Calls fn(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker; fn must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace point2
