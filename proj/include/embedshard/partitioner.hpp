// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "embedshard/costmodel.hpp"
#include "embedshard/error.hpp"
#include "embedshard/machine.hpp"
#include "embedshard/stats.hpp"
#include "embedshard/strategy.hpp"
#include "embedshard/workload.hpp"

namespace embedshard {

/// Contiguous row range [row_offset, row_offset + row_count) of one table.
struct Chunk {
  std::string table_id;
  std::uint64_t row_offset = 0;
  std::uint64_t row_count = 1;
  std::uint32_t replication = 1;  // always 1; kept for the file format
  std::uint64_t row_end() const noexcept { return row_offset + row_count; }
  friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Half-open sample range [begin, end) of the batch.
struct BatchSpan {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t size() const noexcept { return end > begin ? end - begin : 0; }
  bool empty() const noexcept { return end <= begin; }
  friend bool operator==(const BatchSpan&, const BatchSpan&) = default;
};

struct Assignment {
  Chunk chunk;
  StrategyKind strategy = StrategyKind::GM;
  std::uint32_t core = 0;
  BatchSpan batch_span;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

enum class PlanKind : std::uint8_t { Symmetric, Asymmetric };

inline std::string_view to_string(PlanKind k) noexcept {
  return k == PlanKind::Symmetric ? "symmetric" : "asymmetric";
}

inline PlanKind parse_plan_kind(std::string_view s) {
  if (s == "symmetric") return PlanKind::Symmetric;
  if (s == "asymmetric") return PlanKind::Asymmetric;
  throw ParseError("unknown plan mode '" + std::string(s) + "' (expected symmetric|asymmetric)");
}

struct Plan {
  PlanKind kind = PlanKind::Symmetric;
  std::string machine;
  std::uint32_t cores = 1;
  std::uint64_t batch_size = 1;
  std::vector<Assignment> assignments;
  std::vector<double> predicted_core_times;  // one per core, seconds
  double predicted_lif = 1.0;
  // Asymmetric only: items handed to the symmetric scheme after the LIF
  // threshold was reached, in placement order ("table[offset,end)").
  std::vector<std::string> symmetric_fallback;
  friend bool operator==(const Plan&, const Plan&) = default;
};

struct PlannerOptions {
  double lif_threshold = 1.25;
  std::uint64_t l1_reserve_bytes = 0;  // maximum chunk size = l1_bytes - reserve
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Fewest contiguous chunks whose bytes fit `l1_budget_bytes`; row counts
/// differ by at most one, larger chunks first.
inline std::vector<Chunk> chunk_table(const TableSpec& t, std::uint64_t l1_budget_bytes) {
  const std::uint64_t row_bytes = t.row_bytes();
  if (row_bytes == 0 || l1_budget_bytes < row_bytes) {
    throw PlanError("chunk_table('" + t.id + "'): budget of " + std::to_string(l1_budget_bytes) +
                    " bytes is smaller than one row (" + std::to_string(row_bytes) + " bytes)");
  }
  const std::uint64_t rows_per_chunk = l1_budget_bytes / row_bytes;
  const std::uint64_t count = (t.rows + rows_per_chunk - 1) / rows_per_chunk;
  const std::uint64_t base = t.rows / count;
  const std::uint64_t extra = t.rows % count;
  std::vector<Chunk> chunks;
  chunks.reserve(count);
  std::uint64_t offset = 0;
  for (std::uint64_t c = 0; c < count; ++c) {
    const std::uint64_t n = base + (c < extra ? 1 : 0);
    chunks.push_back(Chunk{t.id, offset, n, 1});
    offset += n;
  }
  return chunks;
}

/// Core k handles [k*B/K, (k+1)*B/K); the B mod K leftover samples go one
/// per core starting at core 0. Cores beyond B get an empty span.
inline std::vector<BatchSpan> batch_spans(std::uint64_t batch, std::uint32_t cores) {
  std::vector<BatchSpan> spans(cores);
  const std::uint64_t base = batch / cores;
  const std::uint64_t extra = batch % cores;
  std::uint64_t start = 0;
  for (std::uint32_t k = 0; k < cores; ++k) {
    const std::uint64_t n = base + (k < extra ? 1 : 0);
    spans[k] = BatchSpan{start, start + n};
    start += n;
  }
  return spans;
}

/// Tie-break order when two strategies have equal modeled cost: on-chip
/// before global memory, row-wise before vectorized.
inline constexpr std::array<StrategyKind, 4> kStrategyPreference = {
    StrategyKind::L1, StrategyKind::L1_UB, StrategyKind::GM, StrategyKind::GM_UB};

struct StrategyChoice {
  StrategyKind strategy = StrategyKind::GM;
  double cost = 0.0;
};

/// argmin of the modeled cost over GM, GM-UB and, when `l1_feasible`, the
/// L1 variants. Ties follow kStrategyPreference.
inline StrategyChoice choose_strategy(const CostModel& cm, const std::string& machine,
                                      const TableSpec& t, double lookups, double rows,
                                      bool l1_feasible) {
  StrategyChoice best{StrategyKind::GM, std::numeric_limits<double>::infinity()};
  for (StrategyKind s : kStrategyPreference) {
    if (is_l1(s) && !l1_feasible) continue;
    const double cost = cm.estimate(machine, s, t.embed_dim, lookups, rows);
    if (cost < best.cost) best = StrategyChoice{s, cost};
  }
  return best;
}

namespace detail {

inline void require_coefficients(const Workload& w, const MachineModel& m, const CostModel& cm) {
  for (const auto& t : w.tables) {
    for (StrategyKind s : kAllStrategies) {
      if (is_l1(s) && !m.l1_persistence) continue;
      (void)cm.coefficients(m.name, s, t.embed_dim);
    }
  }
}

inline double plan_lif(const std::vector<double>& times) {
  double sum = 0.0;
  for (double t : times) sum += t;
  return sum > 0.0 ? lif(times) : 1.0;
}

// Placement unit: a whole table or one chunk of it.
struct Item {
  std::size_t table = 0;
  Chunk chunk;
  std::uint64_t bytes = 0;
};

inline std::uint64_t min_l1_left(const std::vector<std::uint64_t>& l1_left,
                                 const std::vector<BatchSpan>& spans, const MachineModel& m) {
  if (!m.l1_persistence) return 0;
  std::uint64_t min_left = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t k = 0; k < spans.size(); ++k)
    if (!spans[k].empty()) min_left = std::min(min_left, l1_left[k]);
  return min_left;
}

// Rejoins adjacent chunks of the same table into contiguous row ranges.
// Items are (placement position, item); a merged range keeps the earliest
// position of its members.
inline std::vector<std::pair<std::size_t, Item>> merge_adjacent_chunks(
    std::vector<std::pair<std::size_t, Item>> parts) {
  std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) {
    if (a.second.table != b.second.table) return a.second.table < b.second.table;
    return a.second.chunk.row_offset < b.second.chunk.row_offset;
  });
  std::vector<std::pair<std::size_t, Item>> out;
  for (const auto& [pos, item] : parts) {
    if (!out.empty() && out.back().second.table == item.table &&
        out.back().second.chunk.row_end() == item.chunk.row_offset) {
      auto& [keep_pos, keep] = out.back();
      keep_pos = std::min(keep_pos, pos);
      keep.chunk.row_count += item.chunk.row_count;
      keep.bytes += item.bytes;
    } else {
      out.emplace_back(pos, item);
    }
  }
  return out;
}

inline std::string item_label(const Chunk& c) {
  return c.table_id + "[" + std::to_string(c.row_offset) + "," + std::to_string(c.row_end()) +
         ")";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Symmetric planner
// ---------------------------------------------------------------------------

/// Every core holds the same whole tables and processes an equal slice of
/// the batch. Tables are visited in placement order; a table may take an L1
/// strategy only while it fits the remaining per-core L1 budget, and each
/// table gets the cheapest feasible strategy under the cost model at
/// B*s/K lookups per core.
inline Plan plan_symmetric(const Workload& w, const MachineModel& m, const CostModel& cm) {
  validate(w);
  validate(m);
  if (w.batch_size < 1) throw PlanError("plan_symmetric: batch size must be >= 1");
  detail::require_coefficients(w, m, cm);

  Plan plan;
  plan.kind = PlanKind::Symmetric;
  plan.machine = m.name;
  plan.cores = m.cores;
  plan.batch_size = w.batch_size;
  plan.predicted_core_times.assign(m.cores, 0.0);

  const auto order = placement_order(w);
  std::vector<StrategyKind> chosen(w.tables.size(), StrategyKind::GM);
  std::uint64_t l1_left = m.l1_bytes;
  const double batch = static_cast<double>(w.batch_size);
  for (std::size_t i : order) {
    const TableSpec& t = w.tables[i];
    const std::uint64_t bytes = table_bytes(t);
    const bool fits = m.l1_persistence && bytes <= l1_left;
    const double lookups = batch * t.seq_len / m.cores;
    chosen[i] = choose_strategy(cm, m.name, t, lookups, static_cast<double>(t.rows), fits).strategy;
    if (is_l1(chosen[i])) l1_left -= bytes;
  }

  const auto spans = batch_spans(w.batch_size, m.cores);
  for (std::uint32_t k = 0; k < m.cores; ++k) {
    if (spans[k].empty()) continue;
    for (std::size_t i : order) {
      const TableSpec& t = w.tables[i];
      plan.assignments.push_back(Assignment{Chunk{t.id, 0, t.rows, 1}, chosen[i], k, spans[k]});
      plan.predicted_core_times[k] +=
          cm.estimate(m.name, chosen[i], t.embed_dim,
                      static_cast<double>(spans[k].size() * t.seq_len),
                      static_cast<double>(t.rows));
    }
  }
  plan.predicted_lif = detail::plan_lif(plan.predicted_core_times);
  return plan;
}

// ---------------------------------------------------------------------------
// Asymmetric planner
// ---------------------------------------------------------------------------

/// Should a table larger than the maximum chunk size be split? Only when
/// the modeled speed-up of the best L1 variant over the best GM variant,
/// both at the full-batch lookup count, exceeds the number of chunks.
struct ChunkingDecision {
  bool split = false;
  std::vector<Chunk> chunks;
  double speedup = 0.0;
};

inline ChunkingDecision chunking_decision(const TableSpec& t, std::uint64_t batch,
                                          const MachineModel& m, const CostModel& cm,
                                          std::uint64_t max_chunk_bytes) {
  ChunkingDecision d;
  if (!m.l1_persistence || table_bytes(t) <= max_chunk_bytes || max_chunk_bytes < t.row_bytes())
    return d;
  d.chunks = chunk_table(t, max_chunk_bytes);
  const double lookups = static_cast<double>(batch) * t.seq_len;
  const double chunk_rows = static_cast<double>(d.chunks.front().row_count);
  const double gm = std::min(cm.estimate(m.name, StrategyKind::GM, t.embed_dim, lookups, t.rows),
                             cm.estimate(m.name, StrategyKind::GM_UB, t.embed_dim, lookups,
                                         static_cast<double>(t.rows)));
  const double l1 =
      std::min(cm.estimate(m.name, StrategyKind::L1, t.embed_dim, lookups, chunk_rows),
               cm.estimate(m.name, StrategyKind::L1_UB, t.embed_dim, lookups, chunk_rows));
  d.speedup = l1 > 0.0 ? gm / l1 : (gm > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  d.split = d.speedup > static_cast<double>(d.chunks.size());
  return d;
}

/// Different cores hold different tables or chunks, each processing the
/// full batch for what it holds.
///   1. Tables above the maximum chunk size are split into the fewest chunks
///      when the modeled L1 speed-up exceeds the chunk count.
///   2. Items go, in placement order, to the core with the lowest predicted
///      time (lowest index on ties).
///   3. An item takes the cheapest strategy among GM, GM-UB and, if it fits
///      that core's remaining L1, L1 and L1-UB.
///   4. Before committing each placement the LIF over the non-idle cores is
///      recomputed; once it would reach the threshold, that item and all
///      later ones are planned symmetrically over all cores.
inline Plan plan_asymmetric(const Workload& w, const MachineModel& m, const CostModel& cm,
                            const PlannerOptions& opts = {}) {
  validate(w);
  validate(m);
  if (w.batch_size < 1) throw PlanError("plan_asymmetric: batch size must be >= 1");
  if (!(opts.lif_threshold > 1.0))
    throw PlanError("plan_asymmetric: lif_threshold must be > 1 (got " +
                    std::to_string(opts.lif_threshold) + ")");
  detail::require_coefficients(w, m, cm);

  Plan plan;
  plan.kind = PlanKind::Asymmetric;
  plan.machine = m.name;
  plan.cores = m.cores;
  plan.batch_size = w.batch_size;

  const std::uint64_t max_chunk =
      m.l1_bytes > opts.l1_reserve_bytes ? m.l1_bytes - opts.l1_reserve_bytes : 0;

  std::vector<detail::Item> items;
  for (std::size_t i = 0; i < w.tables.size(); ++i) {
    const TableSpec& t = w.tables[i];
    const auto d = chunking_decision(t, w.batch_size, m, cm, max_chunk);
    if (d.split) {
      for (const auto& c : d.chunks) items.push_back({i, c, c.row_count * t.row_bytes()});
    } else {
      items.push_back({i, Chunk{t.id, 0, t.rows, 1}, table_bytes(t)});
    }
  }
  std::sort(items.begin(), items.end(), [&](const detail::Item& a, const detail::Item& b) {
    const auto sa = w.tables[a.table].seq_len, sb = w.tables[b.table].seq_len;
    if (sa != sb) return sa > sb;
    if (a.bytes != b.bytes) return a.bytes < b.bytes;
    if (a.chunk.table_id != b.chunk.table_id) return a.chunk.table_id < b.chunk.table_id;
    return a.chunk.row_offset < b.chunk.row_offset;
  });

  std::vector<double> times(m.cores, 0.0);
  std::vector<std::uint64_t> l1_left(m.cores, m.l1_bytes);
  std::vector<bool> busy(m.cores, false);
  const BatchSpan full{0, w.batch_size};

  std::size_t next = 0;
  for (; next < items.size(); ++next) {
    const auto& item = items[next];
    const TableSpec& t = w.tables[item.table];
    const auto core = static_cast<std::uint32_t>(
        std::min_element(times.begin(), times.end()) - times.begin());
    const bool fits = m.l1_persistence && item.bytes <= l1_left[core];
    const double lookups = static_cast<double>(w.batch_size) * t.seq_len;
    const auto choice = choose_strategy(cm, m.name, t, lookups,
                                        static_cast<double>(item.chunk.row_count), fits);

    std::vector<double> active;
    for (std::uint32_t k = 0; k < m.cores; ++k) {
      if (k == core) active.push_back(times[k] + choice.cost);
      else if (busy[k]) active.push_back(times[k]);
    }
    if (detail::plan_lif(active) >= opts.lif_threshold) break;

    times[core] += choice.cost;
    busy[core] = true;
    if (is_l1(choice.strategy)) l1_left[core] -= item.bytes;
    plan.assignments.push_back(Assignment{item.chunk, choice.strategy, core, full});
  }

  // Symmetric fallback for everything not yet placed. Chunks that do not
  // land in L1 are rejoined into row ranges of their table first.
  const auto spans = batch_spans(w.batch_size, m.cores);
  auto choose = [&](const detail::Item& item, bool fits) {
    const TableSpec& t = w.tables[item.table];
    const double lookups = static_cast<double>(w.batch_size) * t.seq_len / m.cores;
    return choose_strategy(cm, m.name, t, lookups, static_cast<double>(item.chunk.row_count),
                           fits)
        .strategy;
  };
  struct Slot {
    std::size_t pos;
    detail::Item item;
    StrategyKind strategy;
  };
  std::vector<Slot> slots;
  std::vector<std::pair<std::size_t, detail::Item>> off_l1_chunks;
  for (std::size_t i = next; i < items.size(); ++i) {
    const auto& item = items[i];
    const bool fits =
        m.l1_persistence && item.bytes <= detail::min_l1_left(l1_left, spans, m);
    const auto strategy = choose(item, fits);
    if (!is_l1(strategy) && item.chunk.row_count < w.tables[item.table].rows) {
      off_l1_chunks.emplace_back(i, item);
      continue;
    }
    if (is_l1(strategy))
      for (std::uint32_t k = 0; k < m.cores; ++k)
        if (!spans[k].empty()) l1_left[k] -= item.bytes;
    slots.push_back({i, item, strategy});
  }
  for (const auto& [pos, item] : detail::merge_adjacent_chunks(std::move(off_l1_chunks)))
    slots.push_back({pos, item, choose(item, false)});
  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return a.pos < b.pos; });

  for (const auto& [pos, item, strategy] : slots) {
    const TableSpec& t = w.tables[item.table];
    plan.symmetric_fallback.push_back(detail::item_label(item.chunk));
    for (std::uint32_t k = 0; k < m.cores; ++k) {
      if (spans[k].empty()) continue;
      times[k] += cm.estimate(m.name, strategy, t.embed_dim,
                              static_cast<double>(spans[k].size() * t.seq_len),
                              static_cast<double>(item.chunk.row_count));
      plan.assignments.push_back(Assignment{item.chunk, strategy, k, spans[k]});
    }
  }

  plan.predicted_core_times = std::move(times);
  plan.predicted_lif = detail::plan_lif(plan.predicted_core_times);
  return plan;
}

inline Plan make_plan(PlanKind kind, const Workload& w, const MachineModel& m, const CostModel& cm,
                      const PlannerOptions& opts = {}) {
  return kind == PlanKind::Symmetric ? plan_symmetric(w, m, cm) : plan_asymmetric(w, m, cm, opts);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Every violated Plan/Assignment/Chunk invariant, or an empty list.
///  - assignments reference known tables, valid row ranges, cores and spans
///  - L1 strategies only with L1 persistence, within each core's L1 capacity
///  - per table, the (row range x batch span) rectangles tile
///    [0, rows) x [0, B) exactly once
///  - predicted_lif matches the predicted core times
inline std::vector<std::string> validate_plan(const Plan& p, const Workload& w,
                                              const MachineModel& m) {
  std::vector<std::string> v;
  if (p.cores != m.cores)
    v.push_back("plan has " + std::to_string(p.cores) + " cores, machine '" + m.name + "' has " +
                std::to_string(m.cores));
  if (p.predicted_core_times.size() != p.cores)
    v.push_back("predicted_core_times has " + std::to_string(p.predicted_core_times.size()) +
                " entries, expected " + std::to_string(p.cores));
  if (p.batch_size != w.batch_size)
    v.push_back("plan batch size " + std::to_string(p.batch_size) + " != workload batch size " +
                std::to_string(w.batch_size));

  using ChunkKey = std::tuple<std::string, std::uint64_t, std::uint64_t>;
  std::map<std::uint32_t, std::set<ChunkKey>> l1_chunks;
  std::map<std::string, std::vector<std::size_t>> by_table;

  for (std::size_t i = 0; i < p.assignments.size(); ++i) {
    const Assignment& a = p.assignments[i];
    const std::string where = "assignment #" + std::to_string(i) + " (table '" +
                              a.chunk.table_id + "')";
    const TableSpec* t = w.find(a.chunk.table_id);
    if (!t) {
      v.push_back(where + ": unknown table");
      continue;
    }
    bool ok = true;
    if (a.chunk.row_count < 1) v.push_back(where + ": empty chunk"), ok = false;
    if (a.chunk.row_offset > t->rows || a.chunk.row_count > t->rows - a.chunk.row_offset)
      v.push_back(where + ": rows [" + std::to_string(a.chunk.row_offset) + "," +
                  std::to_string(a.chunk.row_offset + a.chunk.row_count) + ") exceed " +
                  std::to_string(t->rows) + " table rows"),
          ok = false;
    if (a.chunk.replication != 1)
      v.push_back(where + ": replication " + std::to_string(a.chunk.replication) + " != 1");
    if (a.core >= m.cores)
      v.push_back(where + ": core " + std::to_string(a.core) + " out of range"), ok = false;
    if (a.batch_span.empty() || a.batch_span.end > p.batch_size)
      v.push_back(where + ": batch span [" + std::to_string(a.batch_span.begin) + "," +
                  std::to_string(a.batch_span.end) + ") empty or outside [0," +
                  std::to_string(p.batch_size) + ")"),
          ok = false;
    if (is_l1(a.strategy) && !m.l1_persistence)
      v.push_back(where + ": " + std::string(to_string(a.strategy)) +
                  " requires L1 persistence, disabled on '" + m.name + "'");
    if (!ok) continue;
    if (is_l1(a.strategy))
      l1_chunks[a.core].insert({a.chunk.table_id, a.chunk.row_offset, a.chunk.row_count});
    by_table[a.chunk.table_id].push_back(i);
  }

  for (const auto& [core, chunks] : l1_chunks) {
    std::uint64_t used = 0;
    for (const auto& [id, off, count] : chunks) used += count * w.find(id)->row_bytes();
    if (used > m.l1_bytes)
      v.push_back("core " + std::to_string(core) + ": L1 assignments total " +
                  std::to_string(used) + " bytes, exceeding the L1 budget of " +
                  std::to_string(m.l1_bytes) + " bytes");
  }

  // Coverage on a compressed grid of row and sample breakpoints.
  for (const auto& t : w.tables) {
    const auto it = by_table.find(t.id);
    if (it == by_table.end()) {
      v.push_back("table '" + t.id + "': no assignments");
      continue;
    }
    const auto& idx = it->second;
    std::vector<std::uint64_t> rb{0, t.rows}, sb{0, p.batch_size};
    for (std::size_t i : idx) {
      const Assignment& a = p.assignments[i];
      rb.push_back(a.chunk.row_offset);
      rb.push_back(a.chunk.row_end());
      sb.push_back(a.batch_span.begin);
      sb.push_back(a.batch_span.end);
    }
    auto uniq = [](std::vector<std::uint64_t>& x) {
      std::sort(x.begin(), x.end());
      x.erase(std::unique(x.begin(), x.end()), x.end());
    };
    uniq(rb);
    uniq(sb);
    auto pos = [](const std::vector<std::uint64_t>& x, std::uint64_t val) {
      return static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), val) - x.begin());
    };
    const std::size_t nr = rb.size(), ns = sb.size();
    std::vector<long> grid(nr * ns, 0);
    for (std::size_t i : idx) {
      const Assignment& a = p.assignments[i];
      const auto r0 = pos(rb, a.chunk.row_offset), r1 = pos(rb, a.chunk.row_end());
      const auto s0 = pos(sb, a.batch_span.begin), s1 = pos(sb, a.batch_span.end);
      grid[r0 * ns + s0] += 1;
      grid[r0 * ns + s1] -= 1;
      grid[r1 * ns + s0] -= 1;
      grid[r1 * ns + s1] += 1;
    }
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t s = 0; s < ns; ++s) {
        long acc = grid[r * ns + s];
        if (r > 0) acc += grid[(r - 1) * ns + s];
        if (s > 0) acc += grid[r * ns + s - 1];
        if (r > 0 && s > 0) acc -= grid[(r - 1) * ns + s - 1];
        grid[r * ns + s] = acc;
      }
    bool overlap = false;
    std::size_t gaps = 0;
    for (std::size_t r = 0; r + 1 < nr; ++r) {
      if (rb[r] >= t.rows) continue;
      for (std::size_t s = 0; s + 1 < ns; ++s) {
        if (sb[s] >= p.batch_size) continue;
        const long c = grid[r * ns + s];
        if (c > 1) overlap = true;
        if (c == 0 && gaps++ < 8)
          v.push_back("table '" + t.id + "': rows [" + std::to_string(rb[r]) + "," +
                      std::to_string(rb[r + 1]) + ") x samples [" + std::to_string(sb[s]) + "," +
                      std::to_string(sb[s + 1]) + ") not covered");
      }
    }
    if (overlap) {
      std::size_t reported = 0;
      for (std::size_t x = 0; x < idx.size() && reported < 8; ++x)
        for (std::size_t y = x + 1; y < idx.size() && reported < 8; ++y) {
          const Assignment& a = p.assignments[idx[x]];
          const Assignment& b = p.assignments[idx[y]];
          const auto lo = std::max(a.chunk.row_offset, b.chunk.row_offset);
          const auto hi = std::min(a.chunk.row_end(), b.chunk.row_end());
          const auto slo = std::max(a.batch_span.begin, b.batch_span.begin);
          const auto shi = std::min(a.batch_span.end, b.batch_span.end);
          if (lo < hi && slo < shi) {
            ++reported;
            v.push_back("table '" + t.id + "': assignments #" + std::to_string(idx[x]) + " and #" +
                        std::to_string(idx[y]) + " overlap on rows [" + std::to_string(lo) + "," +
                        std::to_string(hi) + ") x samples [" + std::to_string(slo) + "," +
                        std::to_string(shi) + ")");
          }
        }
    }
  }

  if (p.predicted_core_times.size() == p.cores && p.cores > 0) {
    bool finite = true;
    for (double x : p.predicted_core_times) finite = finite && x >= 0.0 && std::isfinite(x);
    if (!finite) {
      v.push_back("predicted_core_times must be finite and >= 0");
    } else {
      const double expected = detail::plan_lif(p.predicted_core_times);
      if (std::abs(p.predicted_lif - expected) > 1e-9 * expected)
        v.push_back("predicted_lif " + std::to_string(p.predicted_lif) +
                    " != max/mean of predicted core times (" + std::to_string(expected) + ")");
    }
  }
  return v;
}

}  // namespace embedshard
