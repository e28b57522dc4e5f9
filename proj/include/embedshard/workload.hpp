// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "embedshard/error.hpp"
#include "embedshard/parallel.hpp"
#include "embedshard/rng.hpp"

namespace embedshard {

// ---------------------------------------------------------------------------
// Index distributions
// ---------------------------------------------------------------------------

/// Every row equally likely.
struct UniformDist {};

/// Every lookup hits the same row.
struct FixedDist {
  std::uint64_t index = 0;
};

/// Rows drawn i.i.d. proportionally to a per-row weight histogram.
struct EmpiricalDist {
  std::vector<double> weights;
  std::string source;  // weights file the histogram came from, if any
};

using DistributionSpec = std::variant<UniformDist, FixedDist, EmpiricalDist>;

inline std::string distribution_name(const DistributionSpec& d) {
  struct Visitor {
    std::string operator()(const UniformDist&) const { return "uniform"; }
    std::string operator()(const FixedDist&) const { return "fixed"; }
    std::string operator()(const EmpiricalDist&) const { return "empirical"; }
  };
  return std::visit(Visitor{}, d);
}

/// Per-row weights 1/(r+1)^exponent, for synthetic skewed workloads.
inline std::vector<double> zipf_weights(std::uint64_t rows, double exponent) {
  if (rows == 0) throw ValidationError("zipf_weights: rows must be positive");
  if (!(exponent >= 0.0) || !std::isfinite(exponent))
    throw ValidationError("zipf_weights: exponent must be a finite non-negative number");
  std::vector<double> w(rows);
  for (std::uint64_t r = 0; r < rows; ++r)
    w[r] = 1.0 / std::pow(static_cast<double>(r + 1), exponent);
  return w;
}

// ---------------------------------------------------------------------------
// Tables and workloads
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kMaxTableRows = std::uint64_t{1} << 40;

struct TableSpec {
  std::string id;
  std::uint64_t rows = 1;
  std::uint32_t embed_dim = 1;
  std::uint32_t elem_bytes = 2;
  std::uint32_t seq_len = 1;
  DistributionSpec distribution = UniformDist{};

  std::uint64_t row_bytes() const noexcept {
    return std::uint64_t{embed_dim} * elem_bytes;
  }
};

/// rows * embed_dim * elem_bytes. Throws instead of wrapping on overflow.
inline std::uint64_t table_bytes(const TableSpec& t) {
  std::uint64_t row = 0;
  std::uint64_t total = 0;
  if (__builtin_mul_overflow(std::uint64_t{t.embed_dim}, std::uint64_t{t.elem_bytes}, &row) ||
      __builtin_mul_overflow(t.rows, row, &total)) {
    throw ValidationError("table '" + t.id + "': byte size overflows 64 bits");
  }
  return total;
}

/// Checks the TableSpec invariants; the message names the table.
inline void validate(const TableSpec& t) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("table '" + t.id + "': " + what);
  };
  if (t.id.empty()) throw ValidationError("table with empty id");
  if (t.rows < 1) fail("rows must be >= 1");
  if (t.rows > kMaxTableRows) fail("rows must be <= 2^40");
  if (t.embed_dim < 1) fail("embed_dim must be >= 1");
  if (t.seq_len < 1) fail("seq_len must be >= 1");
  if (t.elem_bytes != 1 && t.elem_bytes != 2 && t.elem_bytes != 4 && t.elem_bytes != 8)
    fail("elem_bytes must be one of 1, 2, 4, 8");
  (void)table_bytes(t);

  if (const auto* f = std::get_if<FixedDist>(&t.distribution)) {
    if (f->index >= t.rows)
      fail("fixed index " + std::to_string(f->index) + " out of range [0, " +
           std::to_string(t.rows) + ")");
  } else if (const auto* e = std::get_if<EmpiricalDist>(&t.distribution)) {
    if (e->weights.size() != t.rows)
      fail("empirical weights have " + std::to_string(e->weights.size()) +
           " entries, expected " + std::to_string(t.rows));
    double sum = 0.0;
    for (double w : e->weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) fail("empirical weights must be finite and >= 0");
      sum += w;
    }
    if (!(sum > 0.0)) fail("empirical weights sum to zero");
  }
}

struct Workload {
  std::string name;
  std::vector<TableSpec> tables;
  std::uint64_t batch_size = 1;

  const TableSpec* find(std::string_view id) const {
    for (const auto& t : tables)
      if (t.id == id) return &t;
    return nullptr;
  }

  std::size_t index_of(std::string_view id) const {
    for (std::size_t i = 0; i < tables.size(); ++i)
      if (tables[i].id == id) return i;
    return tables.size();
  }
};

inline void validate(const Workload& w) {
  if (w.tables.empty()) throw ValidationError("workload '" + w.name + "' has no tables");
  if (w.batch_size < 1) throw ValidationError("workload '" + w.name + "': batch_size must be >= 1");
  std::set<std::string> seen;
  for (const auto& t : w.tables) {
    if (!seen.insert(t.id).second) throw ValidationError("table '" + t.id + "': duplicate id");
    validate(t);
  }
}

/// Copy of `w` with every table's distribution replaced.
inline Workload with_distribution(Workload w, const DistributionSpec& d) {
  for (auto& t : w.tables) t.distribution = d;
  return w;
}

inline Workload with_batch_size(Workload w, std::uint64_t batch_size) {
  w.batch_size = batch_size;
  return w;
}

/// Greedy placement order: descending seq_len, then ascending byte size,
/// then table id. Returns indices into w.tables.
inline std::vector<std::size_t> placement_order(const Workload& w) {
  std::vector<std::size_t> order(w.tables.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const TableSpec& ta = w.tables[a];
    const TableSpec& tb = w.tables[b];
    if (ta.seq_len != tb.seq_len) return ta.seq_len > tb.seq_len;
    const auto ba = table_bytes(ta), bb = table_bytes(tb);
    if (ba != bb) return ba < bb;
    return ta.id < tb.id;
  });
  return order;
}

// ---------------------------------------------------------------------------
// Query batches
// ---------------------------------------------------------------------------

/// Row-major batch x seq_len matrix of row indices for one table.
struct IndexMatrix {
  std::uint64_t batch = 0;
  std::uint32_t seq_len = 0;
  std::vector<std::uint64_t> data;

  std::uint64_t operator()(std::uint64_t sample, std::uint32_t j) const {
    return data[sample * seq_len + j];
  }
  std::span<const std::uint64_t> sample(std::uint64_t b) const {
    return {data.data() + b * seq_len, seq_len};
  }
  bool empty() const noexcept { return data.empty(); }
  friend bool operator==(const IndexMatrix&, const IndexMatrix&) = default;
};

struct QueryBatch {
  std::uint64_t seed = 0;
  std::vector<IndexMatrix> tables;  // parallel to Workload::tables
  friend bool operator==(const QueryBatch&, const QueryBatch&) = default;
};

namespace detail {

// Inverse-CDF sampler over a weight histogram. Zero-weight rows are never
// drawn because their cumulative value equals their predecessor's.
class EmpiricalSampler {
 public:
  explicit EmpiricalSampler(const std::vector<double>& weights) : cdf_(weights.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      cdf_[i] = acc;
      if (weights[i] > 0.0) last_positive_ = i;
    }
    total_ = acc;
  }

  std::uint64_t operator()(CounterRng& rng) const {
    const double target = rng.next_unit() * total_;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const auto idx = static_cast<std::size_t>(it - cdf_.begin());
    return idx < cdf_.size() ? idx : last_positive_;
  }

 private:
  std::vector<double> cdf_;
  double total_ = 0.0;
  std::size_t last_positive_ = 0;
};

}  // namespace detail

namespace detail {

inline IndexMatrix draw_table(const Workload& w, std::size_t table_index, std::uint64_t seed,
                              const EmpiricalSampler* sampler) {
  const TableSpec& t = w.tables.at(table_index);
  IndexMatrix m{w.batch_size, t.seq_len, {}};
  m.data.resize(w.batch_size * t.seq_len);
  CounterRng rng(derive_seed(seed, table_index));
  if (std::holds_alternative<UniformDist>(t.distribution)) {
    for (auto& x : m.data) x = rng.next_below(t.rows);
  } else if (const auto* f = std::get_if<FixedDist>(&t.distribution)) {
    std::fill(m.data.begin(), m.data.end(), f->index);
  } else {
    for (auto& x : m.data) x = (*sampler)(rng);
  }
  return m;
}

}  // namespace detail

/// Query source for one workload. Builds each empirical table's sampler
/// once, so repeated batches stay cheap for large tables.
class QueryGenerator {
 public:
  explicit QueryGenerator(const Workload& w) : w_(w), samplers_(w.tables.size()) {
    for (std::size_t i = 0; i < w.tables.size(); ++i)
      if (const auto* e = std::get_if<EmpiricalDist>(&w.tables[i].distribution))
        samplers_[i].emplace(e->weights);
  }

  /// Index matrix of table `table_index`. Each table draws from its own
  /// stream, so tables can be generated independently or in parallel.
  IndexMatrix table(std::size_t table_index, std::uint64_t seed) const {
    const auto& s = samplers_.at(table_index);
    return detail::draw_table(w_, table_index, seed, s ? &*s : nullptr);
  }

  /// Pure in (workload, seed); the result does not depend on `threads`.
  QueryBatch batch(std::uint64_t seed, unsigned threads = 1) const {
    QueryBatch q{seed, std::vector<IndexMatrix>(w_.tables.size())};
    parallel_for(w_.tables.size(), threads, [&](std::size_t i) { q.tables[i] = table(i, seed); });
    return q;
  }

 private:
  const Workload& w_;
  std::vector<std::optional<detail::EmpiricalSampler>> samplers_;
};

/// Index matrix of table `table_index` for one batch.
inline IndexMatrix generate_table_queries(const Workload& w, std::size_t table_index,
                                          std::uint64_t seed) {
  std::optional<detail::EmpiricalSampler> sampler;
  if (const auto* e = std::get_if<EmpiricalDist>(&w.tables.at(table_index).distribution))
    sampler.emplace(e->weights);
  return detail::draw_table(w, table_index, seed, sampler ? &*sampler : nullptr);
}

/// One QueryBatch: a B x s_i index matrix per table.
inline QueryBatch generate_queries(const Workload& w, std::uint64_t seed, unsigned threads = 1) {
  return QueryGenerator(w).batch(seed, threads);
}

}  // namespace embedshard
