// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "embedshard/error.hpp"

namespace embedshard {

/// Order statistic at 1-based index ceil(p * n). A relative slack of 1e-12
/// absorbs binary rounding of p, so percentile([1..100], 0.99) is 99.
inline double percentile(std::span<const double> samples, double p) {
  if (samples.empty()) throw Error("percentile of an empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw Error("percentile: p must be in (0, 1]");
  const auto n = samples.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) * (1.0 - 1e-12)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

inline double p99(std::span<const double> samples) { return percentile(samples, 0.99); }

/// Load imbalance factor max / mean.
inline double lif(std::span<const double> core_times) {
  if (core_times.empty()) throw Error("lif of an empty list");
  double sum = 0.0;
  double mx = 0.0;
  for (double t : core_times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error("lif: core times must be finite and >= 0");
    sum += t;
    mx = std::max(mx, t);
  }
  if (sum == 0.0) throw Error("lif: all core times are zero");
  return mx * static_cast<double>(core_times.size()) / sum;
}

}  // namespace embedshard
