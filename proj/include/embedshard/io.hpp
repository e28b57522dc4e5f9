// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "embedshard/costmodel.hpp"
#include "embedshard/engine.hpp"
#include "embedshard/error.hpp"
#include "embedshard/machine.hpp"
#include "embedshard/partitioner.hpp"
#include "embedshard/workload.hpp"
#include "json.hpp"

// File formats: workload, machine, cost model, plan, timing config and
// simulation result, all JSON.

namespace embedshard {

using json = nlohmann::json;

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file and renames it over `path`.
inline void write_text_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw Error("cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " +
                      ec.message());
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

namespace detail {

template <typename T>
T field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(ctx + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& ctx) {
  return j.contains(key) ? field<T>(j, key, ctx) : fallback;
}

// Integers must be non-negative JSON integers; sign errors are validation
// errors naming the context.
inline std::uint64_t unsigned_field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) throw ValidationError(ctx + ": field '" + key + "' must be >= 0");
  throw ParseError(ctx + ": field '" + key + "' must be an integer");
}

inline std::uint32_t small_field(const json& j, const char* key, const std::string& ctx) {
  const auto v = unsigned_field(j, key, ctx);
  if (v > 0xFFFFFFFFULL) throw ValidationError(ctx + ": field '" + key + "' too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Workload
// ---------------------------------------------------------------------------

/// One non-negative decimal per line, exactly `rows` lines.
inline std::vector<double> load_weights(const std::filesystem::path& path, std::uint64_t rows,
                                        const std::string& table_id) {
  std::ifstream in(path);
  if (!in) throw ParseError("table '" + table_id + "': cannot open weights file '" +
                            path.string() + "'");
  std::vector<double> w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const char* begin = line.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    while (end && (*end == ' ' || *end == '\t')) ++end;
    if (end == begin || *end != '\0' || errno == ERANGE)
      throw ParseError("table '" + table_id + "': weights file line " + std::to_string(lineno) +
                       " is not a decimal number");
    if (!(v >= 0.0))
      throw ValidationError("table '" + table_id + "': weights file line " +
                            std::to_string(lineno) + " is negative");
    w.push_back(v);
  }
  if (w.size() != rows)
    throw ValidationError("table '" + table_id + "': weights file has " +
                          std::to_string(w.size()) + " lines, expected " + std::to_string(rows));
  return w;
}

/// Parses a workload document. Relative weights paths resolve against
/// `base_dir`. Besides uniform/fixed/empirical, {"kind": "zipf",
/// "exponent": s} expands to empirical Zipf weights.
inline Workload workload_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ParseError("workload: expected a JSON object");
  Workload w;
  w.name = detail::field<std::string>(j, "name", "workload");
  w.batch_size = detail::unsigned_field(j, "batch_size", "workload '" + w.name + "'");
  const json& tables = j.contains("tables") ? j.at("tables") : json();
  if (!tables.is_array()) throw ParseError("workload '" + w.name + "': 'tables' must be an array");
  for (const json& tj : tables) {
    TableSpec t;
    t.id = detail::field<std::string>(tj, "id", "table");
    const std::string ctx = "table '" + t.id + "'";
    t.rows = detail::unsigned_field(tj, "rows", ctx);
    t.embed_dim = detail::small_field(tj, "embed_dim", ctx);
    t.elem_bytes = detail::small_field(tj, "elem_bytes", ctx);
    t.seq_len = detail::small_field(tj, "seq_len", ctx);
    const json dist = tj.contains("distribution") ? tj.at("distribution")
                                                  : json{{"kind", "uniform"}};
    const auto kind = detail::field<std::string>(dist, "kind", ctx + " distribution");
    if (kind == "uniform") {
      t.distribution = UniformDist{};
    } else if (kind == "fixed") {
      t.distribution = FixedDist{detail::unsigned_field(dist, "index", ctx + " distribution")};
    } else if (kind == "empirical") {
      const auto rel = detail::field<std::string>(dist, "weights_path", ctx + " distribution");
      std::filesystem::path path(rel);
      if (path.is_relative()) path = base_dir / path;
      if (t.rows > kMaxTableRows) throw ValidationError(ctx + ": rows must be <= 2^40");
      t.distribution = EmpiricalDist{load_weights(path, t.rows, t.id), rel};
    } else if (kind == "zipf") {
      const auto s = detail::field<double>(dist, "exponent", ctx + " distribution");
      if (t.rows < 1 || t.rows > kMaxTableRows) throw ValidationError(ctx + ": invalid rows");
      t.distribution = EmpiricalDist{zipf_weights(t.rows, s), "zipf:" + std::to_string(s)};
    } else {
      throw ParseError(ctx + ": unknown distribution kind '" + kind + "'");
    }
    w.tables.push_back(std::move(t));
  }
  validate(w);
  return w;
}

inline Workload load_workload(const std::filesystem::path& path) {
  const auto j = parse_json(read_text_file(path), "workload '" + path.string() + "'");
  return workload_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Machine
// ---------------------------------------------------------------------------

inline json to_json(const MachineModel& m) {
  return json{{"name", m.name},
              {"cores", m.cores},
              {"l1_bytes", m.l1_bytes},
              {"ub_bytes", m.ub_bytes},
              {"gm_bandwidth", m.gm_bandwidth},
              {"gm_access_latency", m.gm_access_latency},
              {"l1_bandwidth", m.l1_bandwidth},
              {"row_access_bytes_min", m.row_access_bytes_min},
              {"conflict_penalty", m.conflict_penalty},
              {"l1_persistence", m.l1_persistence}};
}

inline MachineModel machine_from_json(const json& j) {
  MachineModel m;
  m.name = detail::field<std::string>(j, "name", "machine");
  const std::string ctx = "machine '" + m.name + "'";
  m.cores = detail::small_field(j, "cores", ctx);
  m.l1_bytes = detail::unsigned_field(j, "l1_bytes", ctx);
  m.ub_bytes = detail::unsigned_field(j, "ub_bytes", ctx);
  m.gm_bandwidth = detail::field<double>(j, "gm_bandwidth", ctx);
  m.gm_access_latency = detail::field<double>(j, "gm_access_latency", ctx);
  m.l1_bandwidth = detail::field<double>(j, "l1_bandwidth", ctx);
  m.row_access_bytes_min = detail::unsigned_field(j, "row_access_bytes_min", ctx);
  m.conflict_penalty = detail::field<double>(j, "conflict_penalty", ctx);
  m.l1_persistence = detail::field_or<bool>(j, "l1_persistence", true, ctx);
  validate(m);
  return m;
}

/// A preset name, or a path to a machine JSON file.
inline MachineModel resolve_machine(const std::string& name_or_path) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(name_or_path, ec))
    return machine_from_json(parse_json(read_text_file(name_or_path), "machine"));
  return builtin_machine(name_or_path);
}

// ---------------------------------------------------------------------------
// Cost model
// ---------------------------------------------------------------------------

inline json to_json(const CostModel& cm) {
  json entries = json::array();
  for (const auto& [k, c] : cm.entries())
    entries.push_back(json{{"machine", k.machine},
                           {"strategy", std::string(to_string(k.strategy))},
                           {"embed_dim", k.embed_dim},
                           {"beta0", c.beta0},
                           {"beta1", c.beta1},
                           {"beta2", c.beta2}});
  return json{{"entries", entries}};
}

inline CostModel costmodel_from_json(const json& j) {
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array())
    throw ParseError("cost model: expected {\"entries\": [...]}");
  CostModel cm;
  for (const json& e : j.at("entries")) {
    CostKey k;
    k.machine = detail::field<std::string>(e, "machine", "cost model entry");
    k.strategy = parse_strategy(detail::field<std::string>(e, "strategy", "cost model entry"));
    k.embed_dim = detail::small_field(e, "embed_dim", "cost model entry");
    Coefficients c{detail::field<double>(e, "beta0", "cost model entry"),
                   detail::field<double>(e, "beta1", "cost model entry"),
                   detail::field_or<double>(e, "beta2", 0.0, "cost model entry")};
    if (!(c.beta0 >= 0.0) || !(c.beta1 >= 0.0) || !(c.beta2 >= 0.0))
      throw ValidationError("cost model entry for (" + std::string(to_string(k.strategy)) +
                            ", embed_dim=" + std::to_string(k.embed_dim) +
                            "): coefficients must be >= 0");
    cm.set(k, c);
  }
  return cm;
}

inline CostModel load_costmodel(const std::filesystem::path& path) {
  return costmodel_from_json(parse_json(read_text_file(path), "cost model '" + path.string() + "'"));
}

// ---------------------------------------------------------------------------
// Plan
// ---------------------------------------------------------------------------

inline json to_json(const Plan& p) {
  json as = json::array();
  for (const auto& a : p.assignments)
    as.push_back(json{{"table_id", a.chunk.table_id},
                      {"row_offset", a.chunk.row_offset},
                      {"row_count", a.chunk.row_count},
                      {"replication", a.chunk.replication},
                      {"strategy", std::string(to_string(a.strategy))},
                      {"core", a.core},
                      {"batch_span", json::array({a.batch_span.begin, a.batch_span.end})}});
  return json{{"kind", std::string(to_string(p.kind))},
              {"machine", p.machine},
              {"cores", p.cores},
              {"batch_size", p.batch_size},
              {"assignments", as},
              {"predicted_core_times", p.predicted_core_times},
              {"predicted_lif", p.predicted_lif},
              {"symmetric_fallback", p.symmetric_fallback}};
}

inline Plan plan_from_json(const json& j) {
  Plan p;
  p.kind = parse_plan_kind(detail::field<std::string>(j, "kind", "plan"));
  p.machine = detail::field_or<std::string>(j, "machine", "", "plan");
  p.cores = detail::small_field(j, "cores", "plan");
  p.batch_size = detail::unsigned_field(j, "batch_size", "plan");
  if (!j.contains("assignments") || !j.at("assignments").is_array())
    throw ParseError("plan: 'assignments' must be an array");
  for (const json& a : j.at("assignments")) {
    Assignment x;
    x.chunk.table_id = detail::field<std::string>(a, "table_id", "plan assignment");
    const std::string ctx = "plan assignment for table '" + x.chunk.table_id + "'";
    x.chunk.row_offset = detail::unsigned_field(a, "row_offset", ctx);
    x.chunk.row_count = detail::unsigned_field(a, "row_count", ctx);
    x.chunk.replication = a.contains("replication") ? detail::small_field(a, "replication", ctx) : 1;
    x.strategy = parse_strategy(detail::field<std::string>(a, "strategy", ctx));
    x.core = detail::small_field(a, "core", ctx);
    const auto span = detail::field<std::vector<std::uint64_t>>(a, "batch_span", ctx);
    if (span.size() != 2) throw ParseError(ctx + ": batch_span must be [start, end]");
    x.batch_span = BatchSpan{span[0], span[1]};
    p.assignments.push_back(std::move(x));
  }
  p.predicted_core_times = detail::field<std::vector<double>>(j, "predicted_core_times", "plan");
  p.predicted_lif = detail::field<double>(j, "predicted_lif", "plan");
  p.symmetric_fallback =
      detail::field_or<std::vector<std::string>>(j, "symmetric_fallback", {}, "plan");
  return p;
}

inline Plan load_plan(const std::filesystem::path& path) {
  return plan_from_json(parse_json(read_text_file(path), "plan '" + path.string() + "'"));
}

// ---------------------------------------------------------------------------
// Timing config
// ---------------------------------------------------------------------------

inline json to_json(const TimingConfig& t) {
  json launch = json::object();
  for (StrategyKind s : kAllStrategies)
    launch[std::string(to_string(s))] = t.launch_s[index_of(s)];
  return json{{"launch_s", launch},
              {"gm_row_latency_s", t.gm_row_latency_s},
              {"gm_byte_s", t.gm_byte_s},
              {"gm_burst_bytes", t.gm_burst_bytes},
              {"l1_row_latency_s", t.l1_row_latency_s},
              {"l1_byte_s", t.l1_byte_s},
              {"pool_byte_s", t.pool_byte_s},
              {"ub_lookup_byte_s", t.ub_lookup_byte_s},
              {"chunk_stage_in_cost", t.chunk_stage_in_cost},
              {"l1_stage_byte_s", t.l1_stage_byte_s},
              {"ub_bytes", t.ub_bytes},
              {"ub_tile_overhead_s", t.ub_tile_overhead_s},
              {"preload_byte_s", t.preload_byte_s},
              {"conflict_penalty", t.conflict_penalty},
              {"jitter", t.jitter},
              {"noise_seed", t.noise_seed}};
}

/// Fields present in `j` override `base` (usually TimingConfig::from_machine).
inline TimingConfig timing_from_json(const json& j, TimingConfig base = {}) {
  if (!j.is_object()) throw ParseError("timing config: expected a JSON object");
  const std::string ctx = "timing config";
  if (j.contains("launch_s")) {
    const json& l = j.at("launch_s");
    if (l.is_number()) {
      base.launch_s.fill(l.get<double>());
    } else if (l.is_object()) {
      for (auto it = l.begin(); it != l.end(); ++it) {
        if (!it.value().is_number()) throw ParseError(ctx + ": launch_s values must be numbers");
        base.launch_s[index_of(parse_strategy(it.key()))] = it.value().get<double>();
      }
    } else {
      throw ParseError(ctx + ": launch_s must be a number or an object keyed by strategy");
    }
  }
  auto num = [&](const char* key, double& dst) { dst = detail::field_or<double>(j, key, dst, ctx); };
  auto uns = [&](const char* key, std::uint64_t& dst) {
    if (j.contains(key)) dst = detail::unsigned_field(j, key, ctx);
  };
  num("gm_row_latency_s", base.gm_row_latency_s);
  num("gm_byte_s", base.gm_byte_s);
  uns("gm_burst_bytes", base.gm_burst_bytes);
  num("l1_row_latency_s", base.l1_row_latency_s);
  num("l1_byte_s", base.l1_byte_s);
  num("pool_byte_s", base.pool_byte_s);
  num("ub_lookup_byte_s", base.ub_lookup_byte_s);
  num("chunk_stage_in_cost", base.chunk_stage_in_cost);
  num("l1_stage_byte_s", base.l1_stage_byte_s);
  uns("ub_bytes", base.ub_bytes);
  num("ub_tile_overhead_s", base.ub_tile_overhead_s);
  num("preload_byte_s", base.preload_byte_s);
  num("conflict_penalty", base.conflict_penalty);
  num("jitter", base.jitter);
  uns("noise_seed", base.noise_seed);
  validate(base);
  return base;
}

inline TimingConfig load_timing(const std::filesystem::path& path, const TimingConfig& base) {
  return timing_from_json(parse_json(read_text_file(path), "timing config '" + path.string() + "'"),
                          base);
}

// ---------------------------------------------------------------------------
// Simulation result
// ---------------------------------------------------------------------------

inline json to_json(const SimResult& r) {
  return json{{"latency_samples", r.latency_samples},
              {"p99", r.p99},
              {"avg_throughput", r.avg_throughput},
              {"lif_observed", r.lif_observed},
              {"per_core_times", r.per_core_times},
              {"setup_s", r.setup_s},
              {"warnings", r.warnings}};
}

}  // namespace embedshard
