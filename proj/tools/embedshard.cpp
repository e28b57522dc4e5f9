// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

// embedshard: fit cost models, plan, simulate, sweep and estimate.
//
// Exit codes: 0 success, 1 simulation or validation failure, 2 usage or
// configuration error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "embedshard/embedshard.hpp"

namespace es = embedshard;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Failures that are the caller's fault map to exit code 2.
struct UsageError : es::Error {
  using es::Error::Error;
};

struct Options {
  std::string workload;
  std::string machine = "ascend910-like";
  std::vector<std::string> machines;
  std::string costmodel;
  std::string timing;
  std::string plan;
  std::string mode = "symmetric";
  double lif_threshold = 1.25;
  std::uint64_t batches = 100;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::uint64_t> batch_sizes;
  std::vector<std::string> distributions{"workload"};
  std::uint64_t batch_size = 0;
  bool verify = false;
};

unsigned threads() { return es::default_thread_count(); }

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    es::write_text_file_atomic(out, text);
  }
}

es::TimingConfig timing_for(const Options& o, const es::MachineModel& m) {
  const auto base = es::TimingConfig::from_machine(m);
  return o.timing.empty() ? base : es::load_timing(o.timing, base);
}

es::PlannerOptions planner_options(const Options& o) {
  if (!(o.lif_threshold > 1.0))
    throw UsageError("--lif-threshold must be > 1 (got " + std::to_string(o.lif_threshold) + ")");
  return es::PlannerOptions{o.lif_threshold, 0};
}

void print_warnings(const std::vector<std::string>& ws) {
  for (const auto& w : ws) std::cerr << "warning: " << w << "\n";
}

void print_plan_summary(const es::Plan& p) {
  for (std::size_t k = 0; k < p.predicted_core_times.size(); ++k)
    std::printf("core %zu: %.9g s\n", k, p.predicted_core_times[k]);
  std::printf("predicted LIF: %.9g\n", p.predicted_lif);
  if (!p.symmetric_fallback.empty())
    std::printf("symmetric fallback: %zu item(s)\n", p.symmetric_fallback.size());
}

int cmd_fit(const Options& o) {
  const auto w = es::load_workload(o.workload);
  const auto m = es::resolve_machine(o.machine);
  es::CalibrationSettings settings;
  settings.batches = o.batches;
  settings.seed = o.seed;
  settings.threads = threads();
  const auto r = es::calibrate(m, w, timing_for(o, m), settings);
  print_warnings(r.warnings);
  emit(o.out, r.model.empty() ? "{}\n" : es::to_json(r.model).dump(2) + "\n");
  return kOk;
}

int cmd_plan(const Options& o) {
  const auto w = es::load_workload(o.workload);
  const auto m = es::resolve_machine(o.machine);
  const auto cm = es::load_costmodel(o.costmodel);
  const auto opts = planner_options(o);
  const auto plan = es::make_plan(es::parse_plan_kind(o.mode), w, m, cm, opts);
  const auto violations = es::validate_plan(plan, w, m);
  for (const auto& v : violations) std::cerr << "invalid plan: " << v << "\n";
  if (!violations.empty()) return kFailure;
  if (!o.out.empty() && o.out != "-") {
    es::write_text_file_atomic(o.out, es::to_json(plan).dump(2) + "\n");
    print_plan_summary(plan);
  } else {
    std::cout << es::to_json(plan).dump(2) << "\n";
  }
  return kOk;
}

int cmd_simulate(const Options& o) {
  const auto w = es::load_workload(o.workload);
  const auto m = es::resolve_machine(o.machine);
  es::Plan plan;
  if (!o.plan.empty()) {
    plan = es::load_plan(o.plan);
  } else {
    if (o.costmodel.empty()) throw UsageError("simulate needs --plan or --costmodel");
    plan = es::make_plan(es::parse_plan_kind(o.mode), w, m, es::load_costmodel(o.costmodel),
                         planner_options(o));
  }
  const auto violations = es::validate_plan(plan, w, m);
  for (const auto& v : violations) std::cerr << "invalid plan: " << v << "\n";
  if (!violations.empty()) return kFailure;

  std::optional<es::EmbeddingStore> store;
  es::SimOptions sim_opts;
  sim_opts.threads = threads();
  if (o.verify) {
    store = es::EmbeddingStore::random_integer(w, o.seed);
    sim_opts.verify_store = &*store;
  }
  const auto r = es::simulate(plan, w, timing_for(o, m), o.batches, o.seed, sim_opts);
  print_warnings(r.warnings);

  es::SweepResult row;
  row.rows.push_back(es::SweepRow{w.batch_size, plan.kind, "workload", r.p99, r.avg_throughput,
                                  r.lif_observed, r.setup_s});
  row.pareto_flags = es::pareto_flags(row.rows);
  std::cout << es::to_csv(row);
  if (!o.out.empty()) es::write_text_file_atomic(o.out, es::to_json(r).dump(2) + "\n");
  return kOk;
}

int cmd_sweep(const Options& o) {
  if (o.batch_sizes.empty()) throw UsageError("--batch-sizes must list at least one batch size");
  const auto w = es::load_workload(o.workload);
  const auto m = es::resolve_machine(o.machine);
  const auto cm = es::load_costmodel(o.costmodel);
  es::SweepConfig cfg;
  cfg.batch_sizes = o.batch_sizes;
  cfg.distributions = o.distributions;
  cfg.batches = o.batches;
  cfg.seed = o.seed;
  cfg.planner = planner_options(o);
  cfg.threads = threads();
  const auto r = es::run_sweep(w, m, cm, timing_for(o, m), cfg);
  print_warnings(r.warnings);
  emit(o.out, es::to_csv(r));
  return kOk;
}

int cmd_estimate(const Options& o) {
  auto w = es::load_workload(o.workload);
  if (o.batch_size > 0) w = es::with_batch_size(w, o.batch_size);
  std::vector<es::MachineModel> ms;
  for (const auto& name : o.machines.empty() ? std::vector<std::string>{o.machine} : o.machines)
    ms.push_back(es::resolve_machine(name));
  emit(o.out, es::to_csv(es::estimate_report(ms, w)));
  return kOk;
}

int cmd_validate(const Options& o) {
  const auto w = es::load_workload(o.workload);
  if (o.plan.empty()) {
    std::printf("workload '%s': %zu tables, ok\n", w.name.c_str(), w.tables.size());
    return kOk;
  }
  const auto m = es::resolve_machine(o.machine);
  const auto violations = es::validate_plan(es::load_plan(o.plan), w, m);
  for (const auto& v : violations) std::printf("%s\n", v.c_str());
  if (!violations.empty()) return kFailure;
  std::printf("plan ok\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plans and simulates sharded embedding lookups on multicore accelerators"};
  app.require_subcommand(1);
  Options o;

  auto add_machine = [&](CLI::App* c) {
    c->add_option("--machine", o.machine, "Preset name or machine JSON path")
        ->capture_default_str();
  };
  auto add_timing = [&](CLI::App* c) {
    c->add_option("--timing", o.timing, "Timing config JSON overriding machine-derived defaults");
  };
  auto add_sim = [&](CLI::App* c) {
    c->add_option("--batches", o.batches, "Simulated batches")->capture_default_str();
    c->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  };
  auto add_planner = [&](CLI::App* c) {
    c->add_option("--mode", o.mode, "symmetric or asymmetric")->capture_default_str();
    c->add_option("--lif-threshold", o.lif_threshold, "Asymmetric LIF threshold (> 1)")
        ->capture_default_str();
  };

  auto* fit = app.add_subcommand("fit-costmodel", "Calibrate a cost model against the engine");
  fit->add_option("--workload", o.workload, "Workload JSON")->required();
  add_machine(fit);
  add_timing(fit);
  add_sim(fit);
  fit->add_option("--out", o.out, "Cost model JSON output (stdout if omitted)");

  auto* plan = app.add_subcommand("plan", "Build a symmetric or asymmetric plan");
  plan->add_option("--workload", o.workload, "Workload JSON")->required();
  add_machine(plan);
  plan->add_option("--costmodel", o.costmodel, "Cost model JSON")->required();
  add_planner(plan);
  plan->add_option("--out", o.out, "Plan JSON output (stdout if omitted)");

  auto* sim = app.add_subcommand("simulate", "Simulate a plan and report P99 and throughput");
  sim->add_option("--workload", o.workload, "Workload JSON")->required();
  add_machine(sim);
  sim->add_option("--plan", o.plan, "Plan JSON");
  sim->add_option("--costmodel", o.costmodel, "Cost model JSON, used when --plan is absent");
  add_planner(sim);
  add_timing(sim);
  add_sim(sim);
  sim->add_flag("--verify", o.verify, "Check functional output against the reference");
  sim->add_option("--out", o.out, "Simulation result JSON output");

  auto* sweep = app.add_subcommand("sweep", "Sweep batch sizes and distributions for both modes");
  sweep->add_option("--workload", o.workload, "Workload JSON")->required();
  add_machine(sweep);
  sweep->add_option("--costmodel", o.costmodel, "Cost model JSON")->required();
  sweep->add_option("--batch-sizes", o.batch_sizes, "Comma-separated batch sizes")
      ->required()
      ->delimiter(',');
  sweep->add_option("--distributions", o.distributions,
                    "Comma-separated: workload, uniform, fixed, zipf:<s>")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--lif-threshold", o.lif_threshold, "Asymmetric LIF threshold (> 1)")
      ->capture_default_str();
  add_timing(sweep);
  add_sim(sweep);
  sweep->add_option("--out", o.out, "CSV output (stdout if omitted)");

  auto* est = app.add_subcommand("estimate", "Theoretical throughput per machine");
  est->add_option("--workload", o.workload, "Workload JSON")->required();
  add_machine(est);
  est->add_option("--machines", o.machines, "Comma-separated presets or JSON paths")
      ->delimiter(',');
  est->add_option("--batch-size", o.batch_size, "Override the workload batch size");
  est->add_option("--out", o.out, "CSV output (stdout if omitted)");

  auto* val = app.add_subcommand("validate", "Validate a workload and optionally a plan");
  val->add_option("--workload", o.workload, "Workload JSON")->required();
  add_machine(val);
  val->add_option("--plan", o.plan, "Plan JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*fit) return cmd_fit(o);
    if (*plan) return cmd_plan(o);
    if (*sim) return cmd_simulate(o);
    if (*sweep) return cmd_sweep(o);
    if (*est) return cmd_estimate(o);
    if (*val) return cmd_validate(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const es::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const es::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const es::CostModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
