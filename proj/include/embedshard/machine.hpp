// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "embedshard/error.hpp"
#include "embedshard/workload.hpp"

namespace embedshard {

/// Parametric multicore accelerator. Bandwidth and latency numbers are
/// configuration, not measured ground truth.
struct MachineModel {
  std::string name;
  std::uint32_t cores = 1;                  // K
  std::uint64_t l1_bytes = 1;               // L, per-core persistent buffer
  std::uint64_t ub_bytes = 1;               // per-core vector staging buffer
  double gm_bandwidth = 1.0;                // bytes/s, aggregate over all cores
  double gm_access_latency = 0.0;           // s, fixed cost of a random small access
  double l1_bandwidth = 1.0;                // bytes/s, per core
  std::uint64_t row_access_bytes_min = 1;   // global-memory burst granularity
  double conflict_penalty = 0.0;            // extra cost per contending core
  bool l1_persistence = true;               // tables may stay resident in L1
};

inline void validate(const MachineModel& m) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("machine '" + m.name + "': " + what);
  };
  if (m.name.empty()) throw ValidationError("machine with empty name");
  if (m.cores < 1) fail("cores must be >= 1");
  if (m.l1_bytes < 1) fail("l1_bytes must be > 0");
  if (m.ub_bytes < 1) fail("ub_bytes must be > 0");
  if (!(m.gm_bandwidth > 0.0) || !std::isfinite(m.gm_bandwidth)) fail("gm_bandwidth must be > 0");
  if (!(m.l1_bandwidth > 0.0) || !std::isfinite(m.l1_bandwidth)) fail("l1_bandwidth must be > 0");
  if (!(m.gm_access_latency >= 0.0) || !std::isfinite(m.gm_access_latency))
    fail("gm_access_latency must be >= 0");
  if (m.row_access_bytes_min < 1) fail("row_access_bytes_min must be > 0");
  if (!(m.conflict_penalty >= 0.0) || !std::isfinite(m.conflict_penalty))
    fail("conflict_penalty must be >= 0");
}

/// Built-in presets. "ascend910-like" carries the published core count and
/// scratchpad sizes; "gpu-like" has L1 persistence disabled.
inline std::vector<MachineModel> builtin_machines() {
  MachineModel ascend;
  ascend.name = "ascend910-like";
  ascend.cores = 32;
  ascend.l1_bytes = 1u << 20;
  ascend.ub_bytes = 256u << 10;
  ascend.gm_bandwidth = 1.2e12;
  ascend.gm_access_latency = 1.0e-7;
  ascend.l1_bandwidth = 2.0e11;
  ascend.row_access_bytes_min = 64;
  ascend.conflict_penalty = 1.0;
  ascend.l1_persistence = true;

  MachineModel gpu;
  gpu.name = "gpu-like";
  gpu.cores = 108;
  gpu.l1_bytes = 192u << 10;
  gpu.ub_bytes = 164u << 10;
  gpu.gm_bandwidth = 1.555e12;
  gpu.gm_access_latency = 1.0e-7;
  gpu.l1_bandwidth = 1.0e11;
  gpu.row_access_bytes_min = 32;
  gpu.conflict_penalty = 1.0;
  gpu.l1_persistence = false;

  return {ascend, gpu};
}

/// Preset by name; the error lists the available presets.
inline MachineModel builtin_machine(const std::string& name) {
  std::string names;
  for (const auto& m : builtin_machines()) {
    if (m.name == name) return m;
    names += (names.empty() ? "" : ", ") + m.name;
  }
  throw ValidationError("unknown machine '" + name + "'; available presets: " + names);
}

/// Breakdown of the conflict-free estimate.
struct TheoreticalEstimate {
  double gm_time = 0.0;      // s per batch on the global-memory channel
  double l1_time = 0.0;      // s per batch on the per-core L1 channel
  double batch_time = 0.0;   // max of the channels
  double throughput = 0.0;   // queries/s
  std::vector<std::string> l1_tables;
};

/// Conflict-free throughput estimate under symmetric partitioning. Tables
/// are packed first-fit into L1 in placement order when persistence is on;
/// L1 traffic is split over the K cores, every other lookup is charged
/// max(row bytes, burst) against the aggregate global-memory bandwidth.
inline TheoreticalEstimate theoretical_estimate_detail(const MachineModel& m, const Workload& w) {
  validate(m);
  validate(w);
  TheoreticalEstimate est;
  double gm_bytes = 0.0;
  double l1_bytes_per_core = 0.0;
  std::uint64_t l1_left = m.l1_bytes;
  const double batch = static_cast<double>(w.batch_size);
  for (std::size_t i : placement_order(w)) {
    const TableSpec& t = w.tables[i];
    const double lookups = batch * t.seq_len;
    const std::uint64_t bytes = table_bytes(t);
    if (m.l1_persistence && bytes <= l1_left) {
      l1_left -= bytes;
      l1_bytes_per_core += lookups * static_cast<double>(t.row_bytes()) / m.cores;
      est.l1_tables.push_back(t.id);
    } else {
      const auto burst = std::max(t.row_bytes(), m.row_access_bytes_min);
      gm_bytes += lookups * static_cast<double>(burst);
    }
  }
  est.gm_time = gm_bytes / m.gm_bandwidth;
  est.l1_time = l1_bytes_per_core / m.l1_bandwidth;
  est.batch_time = std::max(est.gm_time, est.l1_time);
  est.throughput = est.batch_time > 0.0 ? batch / est.batch_time : 0.0;
  return est;
}

/// Conflict-free throughput estimate in queries/s.
inline double theoretical_estimate(const MachineModel& m, const Workload& w) {
  return theoretical_estimate_detail(m, w).throughput;
}

}  // namespace embedshard
