// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "embedshard/costmodel.hpp"
#include "embedshard/engine.hpp"
#include "embedshard/error.hpp"
#include "embedshard/machine.hpp"
#include "embedshard/parallel.hpp"
#include "embedshard/partitioner.hpp"
#include "embedshard/workload.hpp"

namespace embedshard {

struct SweepRow {
  std::uint64_t batch = 0;
  PlanKind mode = PlanKind::Symmetric;
  std::string distribution;
  double p99_s = 0.0;
  double throughput_qps = 0.0;
  double lif = 1.0;
  double setup_s = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<bool> pareto_flags;
  std::vector<std::string> warnings;
};

/// A row is flagged when no row with the same distribution has p99 <= and
/// throughput >= with at least one strict.
inline std::vector<bool> pareto_flags(const std::vector<SweepRow>& rows) {
  std::vector<bool> flags(rows.size(), true);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (i == j || rows[i].distribution != rows[j].distribution) continue;
      const auto& a = rows[j];
      const auto& b = rows[i];
      const bool weak = a.p99_s <= b.p99_s && a.throughput_qps >= b.throughput_qps;
      const bool strict = a.p99_s < b.p99_s || a.throughput_qps > b.throughput_qps;
      if (weak && strict) {
        flags[i] = false;
        break;
      }
    }
  }
  return flags;
}

/// Names accepted in a sweep: "workload" keeps each table's own
/// distribution, "uniform", "fixed" (row 0) and "zipf:<exponent>".
inline Workload apply_distribution(const Workload& w, const std::string& name) {
  if (name == "workload") return w;
  if (name == "uniform") return with_distribution(w, UniformDist{});
  if (name == "fixed") return with_distribution(w, FixedDist{0});
  if (name.rfind("zipf:", 0) == 0) {
    const std::string arg = name.substr(5);
    char* end = nullptr;
    const double s = std::strtod(arg.c_str(), &end);
    if (arg.empty() || *end != '\0' || !(s >= 0.0))
      throw ValidationError("bad zipf exponent in distribution '" + name + "'");
    Workload out = w;
    for (auto& t : out.tables) t.distribution = EmpiricalDist{zipf_weights(t.rows, s), name};
    return out;
  }
  throw ValidationError("unknown distribution '" + name +
                        "' (expected workload, uniform, fixed or zipf:<exponent>)");
}

struct SweepConfig {
  std::vector<std::uint64_t> batch_sizes;
  std::vector<std::string> distributions{"workload"};
  std::uint64_t batches = 100;
  std::uint64_t seed = 0;
  PlannerOptions planner;
  unsigned threads = 1;
};

/// Plans and simulates every (batch, distribution, mode) point. Rows come
/// out in that nesting order, symmetric before asymmetric, whatever the
/// thread count.
inline SweepResult run_sweep(const Workload& w, const MachineModel& m, const CostModel& cm,
                             const TimingConfig& timing, const SweepConfig& cfg) {
  if (cfg.batch_sizes.empty()) throw ValidationError("sweep: batch size list is empty");
  if (cfg.distributions.empty()) throw ValidationError("sweep: distribution list is empty");
  for (auto b : cfg.batch_sizes)
    if (b < 1) throw ValidationError("sweep: batch sizes must be >= 1");

  std::vector<Workload> by_dist;
  for (const auto& d : cfg.distributions) by_dist.push_back(apply_distribution(w, d));

  constexpr PlanKind kModes[2] = {PlanKind::Symmetric, PlanKind::Asymmetric};
  const std::size_t n_dist = cfg.distributions.size();
  const std::size_t points = cfg.batch_sizes.size() * n_dist * 2;
  SweepResult r;
  r.rows.resize(points);
  std::vector<std::vector<std::string>> warnings(points);

  parallel_for(points, cfg.threads, [&](std::size_t i) {
    const std::size_t mode = i % 2;
    const std::size_t d = (i / 2) % n_dist;
    const std::size_t b = i / (2 * n_dist);
    const Workload wl = with_batch_size(by_dist[d], cfg.batch_sizes[b]);
    const Plan plan = make_plan(kModes[mode], wl, m, cm, cfg.planner);
    const auto sim = simulate(plan, wl, timing, cfg.batches, cfg.seed);
    r.rows[i] = SweepRow{wl.batch_size, kModes[mode], cfg.distributions[d], sim.p99,
                         sim.avg_throughput, sim.lif_observed, sim.setup_s};
    warnings[i] = sim.warnings;
  });
  for (const auto& ws : warnings)
    for (const auto& msg : ws)
      if (r.warnings.empty() || r.warnings.back() != msg) r.warnings.push_back(msg);
  r.pareto_flags = pareto_flags(r.rows);
  return r;
}

inline constexpr const char* kSweepCsvHeader =
    "batch,mode,distribution,p99_s,throughput_qps,lif,setup_s,pareto";

inline std::string to_csv(const SweepResult& r) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  char buf[512];
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    std::snprintf(buf, sizeof buf, "%llu,%s,%s,%.9g,%.9g,%.9g,%.9g,%d\n",
                  static_cast<unsigned long long>(row.batch),
                  std::string(to_string(row.mode)).c_str(), row.distribution.c_str(), row.p99_s,
                  row.throughput_qps, row.lif, row.setup_s,
                  i < r.pareto_flags.size() && r.pareto_flags[i] ? 1 : 0);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Theoretical estimate report
// ---------------------------------------------------------------------------

struct EstimateReport {
  std::vector<std::string> machines;
  std::vector<double> throughput;  // queries/s
  // ratio[i][j] = throughput[i] / throughput[j]
  std::vector<std::vector<double>> ratio;
};

inline EstimateReport estimate_report(const std::vector<MachineModel>& machines, const Workload& w) {
  if (machines.empty()) throw ValidationError("estimate: at least one machine is required");
  EstimateReport r;
  for (const auto& m : machines) {
    r.machines.push_back(m.name);
    r.throughput.push_back(theoretical_estimate(m, w));
  }
  const auto n = machines.size();
  r.ratio.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r.ratio[i][j] = r.throughput[i] / r.throughput[j];
  return r;
}

/// CSV with one row per machine; a `vs_<name>` ratio column per machine is
/// added only when there is more than one.
inline std::string to_csv(const EstimateReport& r) {
  const bool ratios = r.machines.size() > 1;
  std::string out = "machine,throughput_qps";
  if (ratios)
    for (const auto& m : r.machines) out += ",vs_" + m;
  out += "\n";
  char buf[64];
  for (std::size_t i = 0; i < r.machines.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g", r.throughput[i]);
    out += r.machines[i] + "," + buf;
    if (ratios) {
      for (std::size_t j = 0; j < r.machines.size(); ++j) {
        std::snprintf(buf, sizeof buf, ",%.9g", r.ratio[i][j]);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace embedshard
