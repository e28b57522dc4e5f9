// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "embedshard/costmodel.hpp"
#include "embedshard/engine.hpp"
#include "embedshard/machine.hpp"
#include "embedshard/partitioner.hpp"
#include "embedshard/workload.hpp"

namespace embedshard {

/// One probe configuration: batch size B on K cores.
struct GridPoint {
  std::uint64_t batch = 1;
  std::uint32_t cores = 1;
};

/// Single-table plan with a forced strategy, batch split evenly over K cores.
inline Plan single_table_plan(const TableSpec& t, StrategyKind s, std::uint64_t batch,
                              std::uint32_t cores, const std::string& machine) {
  Plan p;
  p.kind = PlanKind::Symmetric;
  p.machine = machine;
  p.cores = cores;
  p.batch_size = batch;
  p.predicted_core_times.assign(cores, 0.0);
  const auto spans = batch_spans(batch, cores);
  for (std::uint32_t k = 0; k < cores; ++k)
    if (!spans[k].empty()) p.assignments.push_back({Chunk{t.id, 0, t.rows, 1}, s, k, spans[k]});
  return p;
}

/// Times `table` under `strategy` on the engine for every grid point and
/// records the P99 over `batches` (>= 100) simulated batches. The recorded
/// lookup count is that of the busiest core, ceil(B/K) * s.
inline std::vector<Measurement> measure_for_fit(const MachineModel& machine, const TableSpec& table,
                                                StrategyKind strategy,
                                                const std::vector<GridPoint>& grid,
                                                const TimingConfig& timing,
                                                std::uint64_t batches = 100,
                                                std::uint64_t seed = 0, unsigned threads = 1) {
  validate(machine);
  validate(table);
  if (batches < 100) throw Error("measure_for_fit: at least 100 batches per grid point required");
  std::vector<Measurement> out;
  out.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& pt = grid[g];
    if (pt.batch < 1 || pt.cores < 1) throw Error("measure_for_fit: grid point must have B, K >= 1");
    Workload w{"probe", {table}, pt.batch};
    const Plan plan = single_table_plan(table, strategy, pt.batch, pt.cores, machine.name);
    SimOptions opts;
    opts.threads = threads;
    const auto sim = simulate(plan, w, timing, batches, derive_seed(seed, g), opts);
    const std::uint64_t per_core = (pt.batch + pt.cores - 1) / pt.cores;
    out.push_back(Measurement{strategy, per_core * table.seq_len, table.rows, sim.p99});
  }
  return out;
}

struct CalibrationSettings {
  std::vector<std::uint64_t> probe_rows{1 << 14, 1 << 16, 1 << 18, 1 << 20};
  std::vector<std::uint64_t> probe_batches{256, 1024, 4096, 16384};
  std::uint64_t batches = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct CalibrationResult {
  CostModel model;
  std::vector<Measurement> measurements;
  std::vector<std::string> warnings;
};

/// Fits coefficients for every strategy the machine supports and every
/// embedding shape in the workload, probing synthetic uniform tables of
/// the configured row counts on the machine's core count.
inline CalibrationResult calibrate(const MachineModel& machine, const Workload& w,
                                   const TimingConfig& timing,
                                   const CalibrationSettings& settings = {}) {
  validate(machine);
  validate(w);
  CalibrationResult result;
  std::map<std::uint32_t, std::uint32_t> shapes;  // embed_dim -> elem_bytes
  for (const auto& t : w.tables) shapes.emplace(t.embed_dim, t.elem_bytes);

  std::vector<GridPoint> grid;
  for (auto b : settings.probe_batches) grid.push_back({b, machine.cores});

  for (const auto& [dim, elem] : shapes) {
    for (StrategyKind s : kAllStrategies) {
      if (is_l1(s) && !machine.l1_persistence) continue;
      std::vector<Measurement> ms;
      for (std::size_t r = 0; r < settings.probe_rows.size(); ++r) {
        TableSpec probe;
        probe.id = "probe_" + std::to_string(settings.probe_rows[r]);
        probe.rows = settings.probe_rows[r];
        probe.embed_dim = dim;
        probe.elem_bytes = elem;
        probe.seq_len = 1;
        const auto part = measure_for_fit(machine, probe, s, grid, timing, settings.batches,
                                          derive_seed(settings.seed, r), settings.threads);
        ms.insert(ms.end(), part.begin(), part.end());
      }
      auto fitted = fit(ms, s);
      for (auto& msg : fitted.warnings)
        result.warnings.push_back("embed_dim=" + std::to_string(dim) + ": " + msg);
      result.model.set(machine.name, s, dim, fitted.coefficients);
      result.measurements.insert(result.measurements.end(), ms.begin(), ms.end());
    }
  }
  return result;
}

}  // namespace embedshard
