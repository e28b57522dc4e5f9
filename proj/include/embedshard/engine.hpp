// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "embedshard/error.hpp"
#include "embedshard/machine.hpp"
#include "embedshard/parallel.hpp"
#include "embedshard/partitioner.hpp"
#include "embedshard/rng.hpp"
#include "embedshard/stats.hpp"
#include "embedshard/strategy.hpp"
#include "embedshard/workload.hpp"

namespace embedshard {

// ---------------------------------------------------------------------------
// Embedding values
// ---------------------------------------------------------------------------

/// Dense rows x embed_dim matrix per table, row-major.
template <typename T = float>
class BasicEmbeddingStore {
 public:
  using value_type = T;

  BasicEmbeddingStore() = default;

  explicit BasicEmbeddingStore(const Workload& w) {
    for (const auto& t : w.tables) {
      dims_.push_back(t.embed_dim);
      rows_.push_back(t.rows);
      data_.emplace_back(static_cast<std::size_t>(t.rows) * t.embed_dim, T{});
    }
  }

  /// Integer-valued entries drawn uniformly from [lo, hi].
  static BasicEmbeddingStore random_integer(const Workload& w, std::uint64_t seed, int lo = -8,
                                            int hi = 8) {
    BasicEmbeddingStore s(w);
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    for (std::size_t i = 0; i < s.data_.size(); ++i) {
      CounterRng rng(derive_seed(seed, i));
      for (auto& x : s.data_[i]) x = static_cast<T>(lo + static_cast<int>(rng.next_below(span)));
    }
    return s;
  }

  /// Real-valued entries drawn uniformly from [-1, 1).
  static BasicEmbeddingStore random_real(const Workload& w, std::uint64_t seed) {
    BasicEmbeddingStore s(w);
    for (std::size_t i = 0; i < s.data_.size(); ++i) {
      CounterRng rng(derive_seed(seed, i));
      for (auto& x : s.data_[i]) x = static_cast<T>(2.0 * rng.next_unit() - 1.0);
    }
    return s;
  }

  std::size_t table_count() const noexcept { return data_.size(); }
  std::uint64_t rows(std::size_t table) const { return rows_.at(table); }
  std::uint32_t embed_dim(std::size_t table) const { return dims_.at(table); }

  std::span<const T> row(std::size_t table, std::uint64_t r) const {
    return {data_[table].data() + r * dims_[table], dims_[table]};
  }
  std::span<T> row(std::size_t table, std::uint64_t r) {
    return {data_[table].data() + r * dims_[table], dims_[table]};
  }

 private:
  std::vector<std::uint32_t> dims_;
  std::vector<std::uint64_t> rows_;
  std::vector<std::vector<T>> data_;
};

using EmbeddingStore = BasicEmbeddingStore<float>;

/// Sum-pooled result: one batch x embed_dim matrix per table.
template <typename T = float>
struct BasicPooledOutput {
  std::uint64_t batch = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::vector<T>> tables;

  std::span<const T> row(std::size_t table, std::uint64_t sample) const {
    return {tables[table].data() + sample * dims[table], dims[table]};
  }
  friend bool operator==(const BasicPooledOutput&, const BasicPooledOutput&) = default;
};

using PooledOutput = BasicPooledOutput<float>;

namespace detail {

template <typename T>
void check_store(const Workload& w, const BasicEmbeddingStore<T>& store) {
  if (store.table_count() != w.tables.size())
    throw ValidationError("embedding store has " + std::to_string(store.table_count()) +
                          " tables, workload has " + std::to_string(w.tables.size()));
  for (std::size_t i = 0; i < w.tables.size(); ++i) {
    if (store.rows(i) != w.tables[i].rows || store.embed_dim(i) != w.tables[i].embed_dim)
      throw ValidationError("embedding store shape mismatch for table '" + w.tables[i].id + "'");
  }
}

inline void check_queries(const Workload& w, const QueryBatch& q, bool require_all) {
  if (q.tables.size() != w.tables.size())
    throw ValidationError("query batch has " + std::to_string(q.tables.size()) +
                          " tables, workload has " + std::to_string(w.tables.size()));
  for (std::size_t i = 0; i < w.tables.size(); ++i) {
    const auto& m = q.tables[i];
    if (m.empty() && !require_all) continue;
    if (m.batch != w.batch_size || m.seq_len != w.tables[i].seq_len ||
        m.data.size() != w.batch_size * w.tables[i].seq_len)
      throw ValidationError("query matrix shape mismatch for table '" + w.tables[i].id + "'");
  }
}

template <typename T>
BasicPooledOutput<T> round_output(const Workload& w, const std::vector<std::vector<double>>& acc) {
  BasicPooledOutput<T> out;
  out.batch = w.batch_size;
  for (std::size_t i = 0; i < w.tables.size(); ++i) {
    out.dims.push_back(w.tables[i].embed_dim);
    std::vector<T> v(acc[i].size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<T>(acc[i][k]);
    out.tables.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

/// Single-core oracle: output[i][b] = sum over j < s_i of row q[i][b][j],
/// accumulated in double and rounded to T at the end.
template <typename T>
BasicPooledOutput<T> reference_execute(const Workload& w, const BasicEmbeddingStore<T>& store,
                                       const QueryBatch& q) {
  detail::check_store(w, store);
  detail::check_queries(w, q, true);
  std::vector<std::vector<double>> acc(w.tables.size());
  for (std::size_t i = 0; i < w.tables.size(); ++i) {
    const TableSpec& t = w.tables[i];
    acc[i].assign(w.batch_size * t.embed_dim, 0.0);
    for (std::uint64_t b = 0; b < w.batch_size; ++b) {
      double* dst = acc[i].data() + b * t.embed_dim;
      for (std::uint64_t idx : q.tables[i].sample(b)) {
        if (idx >= t.rows)
          throw Error("table '" + t.id + "': index " + std::to_string(idx) + " out of range");
        const auto src = store.row(i, idx);
        for (std::uint32_t e = 0; e < t.embed_dim; ++e) dst[e] += static_cast<double>(src[e]);
      }
    }
  }
  return detail::round_output<T>(w, acc);
}

// ---------------------------------------------------------------------------
// Timing model
// ---------------------------------------------------------------------------

/// Per-strategy timing parameters, all in seconds (or seconds per byte).
///   GM, L1   : launch + first transfer + pool + (n-1) * max(transfer, pool)
///              per assignment, n = lookups (double-buffered row pipeline).
///              GM transfers cost gm_row_latency + max(row, burst) * gm_byte
///              and are scaled by 1 + conflict_penalty * (c - 1) when c
///              cores read the same row in the same batch.
///   GM-UB    : launch + staged bytes * chunk_stage_in_cost
///              + tiles * ub_tile_overhead + n * row * ub_lookup_byte
///   L1-UB    : as GM-UB with l1_stage_byte instead of chunk_stage_in_cost;
///              the table itself is already resident in L1.
/// The persistent GM->L1 preload is reported separately as setup time.
struct TimingConfig {
  std::array<double, 4> launch_s{5e-7, 5e-7, 5e-7, 5e-7};  // indexed by StrategyKind
  double gm_row_latency_s = 1e-7;
  double gm_byte_s = 0.0;
  std::uint64_t gm_burst_bytes = 1;
  double l1_row_latency_s = 1e-8;
  double l1_byte_s = 0.0;
  double pool_byte_s = 5e-11;
  double ub_lookup_byte_s = 2e-11;
  double chunk_stage_in_cost = 0.0;
  double l1_stage_byte_s = 0.0;
  std::uint64_t ub_bytes = 1;
  double ub_tile_overhead_s = 5e-8;
  double preload_byte_s = 0.0;
  double conflict_penalty = 0.0;
  double jitter = 0.0;  // per-core multiplicative noise amplitude, [0, 1)
  std::uint64_t noise_seed = 0;

  /// Defaults derived from a machine: global-memory bandwidth is shared
  /// evenly by the cores.
  static TimingConfig from_machine(const MachineModel& m) {
    TimingConfig t;
    const double per_core_gm = m.gm_bandwidth / m.cores;
    t.gm_row_latency_s = m.gm_access_latency;
    t.gm_byte_s = 1.0 / per_core_gm;
    t.gm_burst_bytes = m.row_access_bytes_min;
    t.l1_byte_s = 1.0 / m.l1_bandwidth;
    t.chunk_stage_in_cost = 1.0 / per_core_gm;
    t.l1_stage_byte_s = 1.0 / m.l1_bandwidth;
    t.ub_bytes = m.ub_bytes;
    t.preload_byte_s = 1.0 / per_core_gm;
    t.conflict_penalty = m.conflict_penalty;
    return t;
  }
};

inline void validate(const TimingConfig& t) {
  auto nonneg = [](double x) { return x >= 0.0 && std::isfinite(x); };
  bool ok = nonneg(t.gm_row_latency_s) && nonneg(t.gm_byte_s) && nonneg(t.l1_row_latency_s) &&
            nonneg(t.l1_byte_s) && nonneg(t.pool_byte_s) && nonneg(t.ub_lookup_byte_s) &&
            nonneg(t.chunk_stage_in_cost) && nonneg(t.l1_stage_byte_s) &&
            nonneg(t.ub_tile_overhead_s) && nonneg(t.preload_byte_s) &&
            nonneg(t.conflict_penalty);
  for (double x : t.launch_s) ok = ok && nonneg(x);
  if (!ok) throw ValidationError("timing config: all times must be finite and >= 0");
  if (t.ub_bytes < 1 || t.gm_burst_bytes < 1)
    throw ValidationError("timing config: ub_bytes and gm_burst_bytes must be > 0");
  if (!(t.jitter >= 0.0 && t.jitter < 1.0))
    throw ValidationError("timing config: jitter must be in [0, 1)");
}

/// Per-core timing of one batch.
struct CoreTiming {
  double time = 0.0;              // s, including jitter
  std::uint64_t gm_accesses = 0;  // random GM row reads (GM strategy)
  double gm_transfer_time = 0.0;  // s, sum of those reads' transfer times
  double max_conflict_multiplier = 1.0;
};

struct BatchTiming {
  double latency = 0.0;  // max over cores
  std::vector<CoreTiming> cores;
};

namespace detail {

inline void check_plan(const Plan& p, const Workload& w) {
  if (p.batch_size != w.batch_size)
    throw PlanError("plan batch size " + std::to_string(p.batch_size) +
                    " does not match workload batch size " + std::to_string(w.batch_size));
  if (p.cores < 1) throw PlanError("plan has no cores");
  for (const auto& a : p.assignments) {
    const TableSpec* t = w.find(a.chunk.table_id);
    if (!t) throw PlanError("plan references unknown table '" + a.chunk.table_id + "'");
    if (a.chunk.row_count < 1 || a.chunk.row_offset >= t->rows ||
        a.chunk.row_count > t->rows - a.chunk.row_offset)
      throw PlanError("plan chunk out of range for table '" + t->id + "'");
    if (a.core >= p.cores) throw PlanError("plan assignment on core out of range");
    if (a.batch_span.empty() || a.batch_span.end > w.batch_size)
      throw PlanError("plan batch span out of range for table '" + t->id + "'");
  }
}

// Row actually read for a global index: offset-adjusted and clipped.
inline std::uint64_t clipped_row(std::uint64_t global, const Chunk& c) {
  const std::uint64_t local = global < c.row_offset ? 0 : global - c.row_offset;
  return c.row_offset + std::min(local, c.row_count - 1);
}

inline bool in_chunk(std::uint64_t global, const Chunk& c) {
  return global >= c.row_offset && global - c.row_offset < c.row_count;
}

inline std::uint64_t ub_tiles(std::uint64_t staged_bytes, std::uint64_t row_bytes,
                              std::uint64_t ub_bytes) {
  const std::uint64_t tile = std::max(row_bytes, (ub_bytes / row_bytes) * row_bytes);
  return (staged_bytes + tile - 1) / tile;
}

// Per table, sorted (row, number of distinct cores reading it via GM).
using ConflictTable = std::vector<std::pair<std::uint64_t, std::uint32_t>>;

inline std::vector<ConflictTable> conflict_tables(const Plan& p, const Workload& w,
                                                  const std::vector<std::size_t>& table_of,
                                                  const QueryBatch& q) {
  constexpr unsigned kCoreBits = 20;
  std::vector<std::vector<std::uint64_t>> keys(w.tables.size());
  for (std::size_t ai = 0; ai < p.assignments.size(); ++ai) {
    const Assignment& a = p.assignments[ai];
    if (a.strategy != StrategyKind::GM) continue;
    const std::size_t ti = table_of[ai];
    const auto& m = q.tables[ti];
    auto& k = keys[ti];
    for (std::uint64_t b = a.batch_span.begin; b < a.batch_span.end; ++b)
      for (std::uint64_t g : m.sample(b))
        k.push_back((clipped_row(g, a.chunk) << kCoreBits) | a.core);
  }
  std::vector<ConflictTable> out(w.tables.size());
  for (std::size_t ti = 0; ti < keys.size(); ++ti) {
    auto& k = keys[ti];
    if (k.empty()) continue;
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    for (std::uint64_t key : k) {
      const std::uint64_t row = key >> kCoreBits;
      if (!out[ti].empty() && out[ti].back().first == row) ++out[ti].back().second;
      else out[ti].emplace_back(row, 1u);
    }
  }
  return out;
}

inline std::uint32_t conflict_count(const ConflictTable& c, std::uint64_t row) {
  const auto it = std::lower_bound(c.begin(), c.end(), row,
                                   [](const auto& e, std::uint64_t r) { return e.first < r; });
  return (it != c.end() && it->first == row) ? it->second : 1u;
}

}  // namespace detail

/// Seconds the plan's cores spend on one batch. Only tables read with the
/// GM strategy need index matrices, and only when conflict_penalty > 0.
inline BatchTiming time_batch(const Plan& p, const Workload& w, const QueryBatch& q,
                              const TimingConfig& cfg) {
  detail::check_plan(p, w);
  detail::check_queries(w, q, false);
  std::vector<std::size_t> table_of(p.assignments.size());
  for (std::size_t ai = 0; ai < p.assignments.size(); ++ai)
    table_of[ai] = w.index_of(p.assignments[ai].chunk.table_id);

  const bool conflicts = cfg.conflict_penalty > 0.0;
  std::vector<detail::ConflictTable> ctab;
  if (conflicts) {
    for (std::size_t ai = 0; ai < p.assignments.size(); ++ai)
      if (p.assignments[ai].strategy == StrategyKind::GM && q.tables[table_of[ai]].empty())
        throw ValidationError("query batch lacks indices for GM table '" +
                              p.assignments[ai].chunk.table_id + "'");
    ctab = detail::conflict_tables(p, w, table_of, q);
  }

  BatchTiming bt;
  bt.cores.assign(p.cores, CoreTiming{});
  for (std::size_t ai = 0; ai < p.assignments.size(); ++ai) {
    const Assignment& a = p.assignments[ai];
    const TableSpec& t = w.tables[table_of[ai]];
    CoreTiming& core = bt.cores[a.core];
    const double row = static_cast<double>(t.row_bytes());
    const std::uint64_t n = a.batch_span.size() * t.seq_len;
    const double pool = row * cfg.pool_byte_s;
    double time = cfg.launch_s[index_of(a.strategy)];

    switch (a.strategy) {
      case StrategyKind::GM: {
        const double burst = static_cast<double>(std::max(t.row_bytes(), cfg.gm_burst_bytes));
        const double base = cfg.gm_row_latency_s + burst * cfg.gm_byte_s;
        if (!conflicts) {
          time += base + pool + static_cast<double>(n - 1) * std::max(base, pool);
          core.gm_transfer_time += base * static_cast<double>(n);
        } else {
          const auto& m = q.tables[table_of[ai]];
          const auto& ct = ctab[table_of[ai]];
          bool first = true;
          for (std::uint64_t b = a.batch_span.begin; b < a.batch_span.end; ++b) {
            for (std::uint64_t g : m.sample(b)) {
              const auto c = detail::conflict_count(ct, detail::clipped_row(g, a.chunk));
              const double mult = 1.0 + cfg.conflict_penalty * static_cast<double>(c - 1);
              const double transfer = base * mult;
              time += first ? transfer : std::max(transfer, pool);
              first = false;
              core.gm_transfer_time += transfer;
              core.max_conflict_multiplier = std::max(core.max_conflict_multiplier, mult);
            }
          }
          time += pool;
        }
        core.gm_accesses += n;
        break;
      }
      case StrategyKind::L1: {
        const double transfer = cfg.l1_row_latency_s + row * cfg.l1_byte_s;
        time += transfer + pool + static_cast<double>(n - 1) * std::max(transfer, pool);
        break;
      }
      case StrategyKind::GM_UB:
      case StrategyKind::L1_UB: {
        const std::uint64_t staged = a.chunk.row_count * t.row_bytes();
        const double per_byte = a.strategy == StrategyKind::GM_UB ? cfg.chunk_stage_in_cost
                                                                  : cfg.l1_stage_byte_s;
        time += static_cast<double>(staged) * per_byte +
                static_cast<double>(detail::ub_tiles(staged, t.row_bytes(), cfg.ub_bytes)) *
                    cfg.ub_tile_overhead_s +
                static_cast<double>(n) * row * cfg.ub_lookup_byte_s;
        break;
      }
    }
    core.time += time;
  }

  for (std::uint32_t k = 0; k < p.cores; ++k) {
    if (cfg.jitter > 0.0) {
      CounterRng rng(derive_seed(cfg.noise_seed, derive_seed(q.seed, k)));
      bt.cores[k].time *= 1.0 + cfg.jitter * (2.0 * rng.next_unit() - 1.0);
    }
    bt.latency = std::max(bt.latency, bt.cores[k].time);
  }
  return bt;
}

/// One-off cost of persisting the plan's L1-resident chunks: the slowest
/// core's preload. Not part of any batch latency.
inline double setup_time(const Plan& p, const Workload& w, const TimingConfig& cfg) {
  std::vector<std::set<std::tuple<std::string, std::uint64_t, std::uint64_t>>> resident(p.cores);
  for (const auto& a : p.assignments)
    if (is_l1(a.strategy) && a.core < p.cores)
      resident[a.core].insert({a.chunk.table_id, a.chunk.row_offset, a.chunk.row_count});
  double worst = 0.0;
  for (const auto& chunks : resident) {
    double bytes = 0.0;
    for (const auto& [id, off, count] : chunks)
      if (const TableSpec* t = w.find(id)) bytes += static_cast<double>(count * t->row_bytes());
    worst = std::max(worst, bytes * cfg.preload_byte_s);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Plan execution
// ---------------------------------------------------------------------------

struct ExecuteOptions {
  // Zero the contribution of indices outside an assignment's chunk. Turning
  // this off is a diagnostic that exposes double counting of clipped rows.
  bool mask_out_of_chunk = true;
  unsigned threads = 1;
};

template <typename T>
struct BasicExecutionResult {
  BasicPooledOutput<T> output;
  double latency = 0.0;
  std::vector<double> core_times;
  std::vector<CoreTiming> cores;
};

using ExecutionResult = BasicExecutionResult<float>;

/// Functional part of execute_plan: every core gathers the rows of its
/// assignments (offset-adjusted, clipped, masked outside the chunk) into
/// per-core partial sums, which are merged in core-index order.
template <typename T>
BasicPooledOutput<T> execute_functional(const Plan& p, const Workload& w,
                                        const BasicEmbeddingStore<T>& store, const QueryBatch& q,
                                        const ExecuteOptions& opts = {}) {
  detail::check_plan(p, w);
  detail::check_store(w, store);
  detail::check_queries(w, q, true);

  std::vector<std::vector<std::size_t>> by_core(p.cores);
  for (std::size_t ai = 0; ai < p.assignments.size(); ++ai)
    by_core[p.assignments[ai].core].push_back(ai);

  // partial[ai]: span x embed_dim partial sums of assignment ai.
  std::vector<std::vector<double>> partial(p.assignments.size());
  parallel_for(p.cores, opts.threads, [&](std::size_t core) {
    for (std::size_t ai : by_core[core]) {
      const Assignment& a = p.assignments[ai];
      const std::size_t ti = w.index_of(a.chunk.table_id);
      const TableSpec& t = w.tables[ti];
      auto& acc = partial[ai];
      acc.assign(a.batch_span.size() * t.embed_dim, 0.0);
      for (std::uint64_t b = a.batch_span.begin; b < a.batch_span.end; ++b) {
        double* dst = acc.data() + (b - a.batch_span.begin) * t.embed_dim;
        for (std::uint64_t g : q.tables[ti].sample(b)) {
          if (g >= t.rows)
            throw Error("table '" + t.id + "': index " + std::to_string(g) + " out of range");
          if (opts.mask_out_of_chunk && !detail::in_chunk(g, a.chunk)) continue;
          const auto src = store.row(ti, detail::clipped_row(g, a.chunk));
          for (std::uint32_t e = 0; e < t.embed_dim; ++e) dst[e] += static_cast<double>(src[e]);
        }
      }
    }
  });

  std::vector<std::vector<double>> acc(w.tables.size());
  for (std::size_t i = 0; i < w.tables.size(); ++i)
    acc[i].assign(w.batch_size * w.tables[i].embed_dim, 0.0);
  for (std::uint32_t core = 0; core < p.cores; ++core) {
    for (std::size_t ai : by_core[core]) {
      const Assignment& a = p.assignments[ai];
      const std::size_t ti = w.index_of(a.chunk.table_id);
      const std::uint32_t dim = w.tables[ti].embed_dim;
      double* dst = acc[ti].data() + a.batch_span.begin * dim;
      const auto& src = partial[ai];
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
    }
  }
  return detail::round_output<T>(w, acc);
}

/// Functional output plus the batch's simulated timing.
template <typename T>
BasicExecutionResult<T> execute_plan(const Plan& p, const Workload& w,
                                     const BasicEmbeddingStore<T>& store, const QueryBatch& q,
                                     const TimingConfig& cfg, const ExecuteOptions& opts = {}) {
  validate(cfg);
  BasicExecutionResult<T> r;
  r.output = execute_functional(p, w, store, q, opts);
  auto bt = time_batch(p, w, q, cfg);
  r.latency = bt.latency;
  for (const auto& c : bt.cores) r.core_times.push_back(c.time);
  r.cores = std::move(bt.cores);
  return r;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimResult {
  std::vector<double> latency_samples;  // s per batch
  double p99 = 0.0;
  double avg_throughput = 0.0;  // queries/s
  double lif_observed = 1.0;    // over mean per-core times
  std::vector<std::vector<double>> per_core_times;  // [core][batch]
  double setup_s = 0.0;
  std::vector<std::string> warnings;
};

struct SimOptions {
  unsigned threads = 1;
  // When set, every batch is also executed functionally against this store
  // and compared with the single-core reference; a mismatch throws.
  const EmbeddingStore* verify_store = nullptr;
};

inline std::uint64_t batch_seed(std::uint64_t seed, std::uint64_t batch_index) {
  return derive_seed(seed, batch_index);
}

/// Runs `batches` batches with seeds derived from `seed`. The result is
/// identical for any thread count.
inline SimResult simulate(const Plan& p, const Workload& w, const TimingConfig& cfg,
                          std::uint64_t batches, std::uint64_t seed, const SimOptions& opts = {}) {
  validate(w);
  validate(cfg);
  detail::check_plan(p, w);
  if (batches < 1) throw Error("simulate: batches must be >= 1");

  SimResult r;
  if (batches < 100)
    r.warnings.push_back("simulate: " + std::to_string(batches) +
                         " batches is below 100; P99 is not meaningful");

  std::vector<bool> needed(w.tables.size(), opts.verify_store != nullptr);
  if (cfg.conflict_penalty > 0.0)
    for (const auto& a : p.assignments)
      if (a.strategy == StrategyKind::GM) needed[w.index_of(a.chunk.table_id)] = true;

  const QueryGenerator gen(w);
  r.latency_samples.assign(batches, 0.0);
  r.per_core_times.assign(p.cores, std::vector<double>(batches, 0.0));
  parallel_for(batches, opts.threads, [&](std::size_t b) {
    const std::uint64_t s = batch_seed(seed, b);
    QueryBatch q{s, std::vector<IndexMatrix>(w.tables.size())};
    for (std::size_t i = 0; i < w.tables.size(); ++i)
      if (needed[i]) q.tables[i] = gen.table(i, s);
    const auto bt = time_batch(p, w, q, cfg);
    r.latency_samples[b] = bt.latency;
    for (std::uint32_t k = 0; k < p.cores; ++k) r.per_core_times[k][b] = bt.cores[k].time;
    if (opts.verify_store) {
      const auto got = execute_functional(p, w, *opts.verify_store, q);
      if (!(got == reference_execute(w, *opts.verify_store, q)))
        throw Error("simulate: plan output differs from the reference on batch " +
                    std::to_string(b));
    }
  });

  r.p99 = p99(r.latency_samples);
  double total = 0.0;
  for (double x : r.latency_samples) total += x;
  r.avg_throughput =
      total > 0.0 ? static_cast<double>(w.batch_size) * static_cast<double>(batches) / total : 0.0;
  std::vector<double> mean_core(p.cores, 0.0);
  for (std::uint32_t k = 0; k < p.cores; ++k) {
    for (double x : r.per_core_times[k]) mean_core[k] += x;
    mean_core[k] /= static_cast<double>(batches);
  }
  r.lif_observed = detail::plan_lif(mean_core);
  r.setup_s = setup_time(p, w, cfg);
  return r;
}

}  // namespace embedshard
