// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

namespace es = embedshard;
namespace fs = std::filesystem;
using es::StrategyKind;
using es::testing::make_machine;
using es::testing::make_table;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("embedshard_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

std::string expect_error_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const es::Error& e) {
    return e.what();
  }
  ADD_FAILURE() << "no error";
  return {};
}

}  // namespace

using WorkloadFile = TempDir;

TEST_F(WorkloadFile, SingleUniformTable) {
  const auto p = write("w.json", R"({"name": "one", "batch_size": 8, "tables": [
    {"id": "t", "rows": 10, "embed_dim": 16, "elem_bytes": 2, "seq_len": 1,
     "distribution": {"kind": "uniform"}}]})");
  const auto w = es::load_workload(p);
  ASSERT_EQ(w.tables.size(), 1u);
  EXPECT_EQ(es::table_bytes(w.tables[0]), 320u);
  EXPECT_EQ(w.batch_size, 8u);
  EXPECT_TRUE(std::holds_alternative<es::UniformDist>(w.tables[0].distribution));
}

TEST_F(WorkloadFile, FixedAndEmpiricalWithRelativeWeights) {
  fs::create_directories(dir_ / "weights");
  write("weights/t.txt", "0\n0.5\n1.5\n");
  const auto p = write("w.json", R"({"name": "two", "batch_size": 4, "tables": [
    {"id": "f", "rows": 4, "embed_dim": 2, "elem_bytes": 4, "seq_len": 2,
     "distribution": {"kind": "fixed", "index": 2}},
    {"id": "e", "rows": 3, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1,
     "distribution": {"kind": "empirical", "weights_path": "weights/t.txt"}}]})");
  const auto w = es::load_workload(p);
  EXPECT_EQ(std::get<es::FixedDist>(w.tables[0].distribution).index, 2u);
  EXPECT_EQ(std::get<es::EmpiricalDist>(w.tables[1].distribution).weights,
            (std::vector<double>{0, 0.5, 1.5}));
}

TEST_F(WorkloadFile, WeightLengthMismatchNamesTable) {
  write("w.txt", "1\n2\n");
  const auto p = write("w.json", R"({"name": "x", "batch_size": 4, "tables": [
    {"id": "clicks", "rows": 3, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1,
     "distribution": {"kind": "empirical", "weights_path": "w.txt"}}]})");
  const auto msg = expect_error_message([&] { es::load_workload(p); });
  EXPECT_NE(msg.find("'clicks'"), std::string::npos) << msg;
}

TEST_F(WorkloadFile, ErrorsNameTheTable) {
  auto load = [&](const std::string& tables) {
    const auto p = write("w.json", R"({"name": "x", "batch_size": 4, "tables": [)" + tables + "]}");
    return expect_error_message([&] { es::load_workload(p); });
  };
  EXPECT_NE(load(R"({"id": "z", "rows": 0, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1})")
                .find("'z'"),
            std::string::npos);
  EXPECT_NE(load(R"({"id": "neg", "rows": -5, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1})")
                .find("'neg'"),
            std::string::npos);
  EXPECT_NE(load(R"({"id": "d", "rows": 5, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1},
                    {"id": "d", "rows": 6, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1})")
                .find("'d'"),
            std::string::npos);
  EXPECT_NE(load(R"({"id": "k", "rows": 5, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1,
                     "distribution": {"kind": "pareto"}})")
                .find("'k'"),
            std::string::npos);
  EXPECT_NE(load(R"({"id": "nofield", "rows": 5, "embed_dim": 2, "seq_len": 1})").find("'nofield'"),
            std::string::npos);
  EXPECT_NE(load(R"({"id": "w", "rows": 2, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1,
                     "distribution": {"kind": "empirical", "weights_path": "missing.txt"}})")
                .find("'w'"),
            std::string::npos);
}

TEST_F(WorkloadFile, MalformedJsonIsAParseError) {
  const auto p = write("w.json", "{\"name\": ");
  EXPECT_THROW(es::load_workload(p), es::ParseError);
  EXPECT_THROW(es::load_workload(dir_ / "absent.json"), es::ParseError);
  write("bad.txt", "1\nabc\n");
  const auto q = write("w2.json", R"({"name": "x", "batch_size": 4, "tables": [
    {"id": "t", "rows": 2, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1,
     "distribution": {"kind": "empirical", "weights_path": "bad.txt"}}]})");
  EXPECT_THROW(es::load_workload(q), es::ParseError);
}

TEST_F(WorkloadFile, ZipfKind) {
  const auto p = write("w.json", R"({"name": "z", "batch_size": 4, "tables": [
    {"id": "t", "rows": 4, "embed_dim": 2, "elem_bytes": 4, "seq_len": 1,
     "distribution": {"kind": "zipf", "exponent": 1.0}}]})");
  const auto w = es::load_workload(p);
  EXPECT_EQ(std::get<es::EmpiricalDist>(w.tables[0].distribution).weights, es::zipf_weights(4, 1.0));
}

TEST(SampleWorkloads, CriteoLikeHas26Tables) {
  const auto w = es::load_workload(fs::path(EMBEDSHARD_SAMPLES_DIR) / "criteo_like.json");
  EXPECT_EQ(w.tables.size(), 26u);
  for (const auto& t : w.tables) {
    EXPECT_EQ(t.embed_dim, 16u);
    EXPECT_EQ(t.elem_bytes, 2u);
    EXPECT_EQ(t.seq_len, 1u);
  }
}

TEST(SampleWorkloads, AllSamplesLoad) {
  for (const auto& entry : fs::directory_iterator(EMBEDSHARD_SAMPLES_DIR)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("workload", 0) == 0 || name == "criteo_like.json") {
      EXPECT_NO_THROW(es::load_workload(entry.path())) << name;
    }
  }
}

TEST(JsonRoundTrip, Machine) {
  for (const auto& m : es::builtin_machines()) {
    const auto back = es::machine_from_json(es::to_json(m));
    EXPECT_EQ(es::to_json(back), es::to_json(m));
  }
  EXPECT_THROW(es::machine_from_json(nlohmann::json{{"name", "x"}}), es::ParseError);
}

TEST(JsonRoundTrip, CostModelIsBitExact) {
  const auto cm = es::testing::make_cost_model("m", 16, {1.0 / 3, 2e-9, 0}, {1e-6, 3e-9, 1.0 / 7},
                                               {0, 1e-12, 0}, {5e-7, 1e-10, 1e-15});
  const auto back = es::costmodel_from_json(nlohmann::json::parse(es::to_json(cm).dump()));
  EXPECT_EQ(back.entries(), cm.entries());
  auto bad = es::to_json(cm);
  bad["entries"][0]["beta1"] = -1.0;
  EXPECT_THROW(es::costmodel_from_json(bad), es::ValidationError);
}

TEST(JsonRoundTrip, Plan) {
  es::CounterRng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto in = es::testing::random_instance(rng);
    const auto p = es::plan_asymmetric(in.workload, in.machine, in.cost_model);
    EXPECT_EQ(es::plan_from_json(nlohmann::json::parse(es::to_json(p).dump())), p);
  }
}

TEST(JsonRoundTrip, TimingOverridesOnlyGivenFields) {
  const auto base = es::TimingConfig::from_machine(es::builtin_machine("ascend910-like"));
  const auto t = es::timing_from_json(
      nlohmann::json{{"jitter", 0.1}, {"launch_s", {{"GM-UB", 1e-5}}}}, base);
  EXPECT_EQ(t.jitter, 0.1);
  EXPECT_EQ(t.launch_s[es::index_of(StrategyKind::GM_UB)], 1e-5);
  EXPECT_EQ(t.launch_s[es::index_of(StrategyKind::GM)], base.launch_s[0]);
  EXPECT_EQ(t.gm_byte_s, base.gm_byte_s);
  const auto all = es::timing_from_json(es::to_json(t));
  EXPECT_EQ(es::to_json(all), es::to_json(t));
  EXPECT_THROW(es::timing_from_json(nlohmann::json{{"jitter", 2.0}}, base), es::ValidationError);
}

using AtomicWrite = TempDir;

TEST_F(AtomicWrite, OverwritesWithoutLeftovers) {
  const auto p = dir_ / "out.csv";
  es::write_text_file_atomic(p, "first\n");
  es::write_text_file_atomic(p, "second\n");
  EXPECT_EQ(es::read_text_file(p), "second\n");
  EXPECT_FALSE(fs::exists(dir_ / "out.csv.tmp"));
}

TEST(Pareto, DominanceWithinDistributionGroup) {
  std::vector<es::SweepRow> rows{
      {1024, es::PlanKind::Symmetric, "u", 2.0, 100.0, 1, 0},
      {1024, es::PlanKind::Asymmetric, "u", 1.0, 200.0, 1, 0},  // dominates row 0
      {2048, es::PlanKind::Symmetric, "u", 3.0, 300.0, 1, 0},   // trade-off
      {1024, es::PlanKind::Symmetric, "f", 2.0, 100.0, 1, 0},   // other group
      {2048, es::PlanKind::Symmetric, "f", 2.0, 100.0, 1, 0},   // tie, both kept
  };
  EXPECT_EQ(es::pareto_flags(rows), (std::vector<bool>{false, true, true, true, true}));
}

TEST(Pareto, MatchesBruteForceDefinition) {
  es::CounterRng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<es::SweepRow> rows(1 + rng.next_below(12));
    for (auto& r : rows) {
      r.distribution = rng.next_below(2) ? "a" : "b";
      r.p99_s = static_cast<double>(rng.next_below(5));
      r.throughput_qps = static_cast<double>(rng.next_below(5));
    }
    const auto flags = es::pareto_flags(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      bool dominated = false;
      for (std::size_t j = 0; j < rows.size(); ++j)
        if (rows[j].distribution == rows[i].distribution && rows[j].p99_s <= rows[i].p99_s &&
            rows[j].throughput_qps >= rows[i].throughput_qps &&
            (rows[j].p99_s < rows[i].p99_s || rows[j].throughput_qps > rows[i].throughput_qps))
          dominated = true;
      ASSERT_EQ(flags[i], !dominated);
    }
  }
}

TEST(Sweep, CardinalityOrderAndCsv) {
  const auto m = make_machine(4, 1 << 12);
  es::Workload w{"w", {make_table("a", 100, 8, 4, 2), make_table("b", 5000, 8, 4)}, 8};
  const auto cm = es::testing::default_cost_model("test", 8);
  es::SweepConfig cfg;
  cfg.batch_sizes = {1024, 8192};
  cfg.distributions = {"uniform", "fixed"};
  const auto r = es::run_sweep(w, m, cm, es::testing::linear_timing(), cfg);
  ASSERT_EQ(r.rows.size(), 8u);
  const char* dists[] = {"uniform", "uniform", "fixed", "fixed"};
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(r.rows[i].batch, i < 4 ? 1024u : 8192u);
    EXPECT_EQ(r.rows[i].distribution, dists[i % 4]);
    EXPECT_EQ(r.rows[i].mode, i % 2 ? es::PlanKind::Asymmetric : es::PlanKind::Symmetric);
  }
  const auto csv = es::to_csv(r);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "batch,mode,distribution,p99_s,throughput_qps,lif,setup_s,pareto");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_EQ(csv.find("\n1024,symmetric,uniform,"), header.size());
}

TEST(Sweep, SameSeedSameBytesAnyThreadCount) {
  const auto m = make_machine(4, 1 << 12);
  es::Workload w{"w", {make_table("a", 100, 8, 4, 2), make_table("b", 5000, 8, 4)}, 8};
  const auto cm = es::testing::default_cost_model("test", 8);
  auto timing = es::testing::linear_timing();
  timing.jitter = 0.1;
  timing.conflict_penalty = 1.0;
  es::SweepConfig cfg;
  cfg.batch_sizes = {16, 64};
  cfg.distributions = {"workload", "zipf:1.2"};
  cfg.seed = 11;
  const auto one = es::to_csv(es::run_sweep(w, m, cm, timing, cfg));
  cfg.threads = 4;
  EXPECT_EQ(es::to_csv(es::run_sweep(w, m, cm, timing, cfg)), one);
  cfg.threads = 1;
  cfg.seed = 12;
  EXPECT_NE(es::to_csv(es::run_sweep(w, m, cm, timing, cfg)), one);
}

TEST(Sweep, RejectsBadInputs) {
  const auto m = make_machine(2, 1 << 12);
  es::Workload w{"w", {make_table("a", 100, 8, 4)}, 8};
  const auto cm = es::testing::default_cost_model("test", 8);
  es::SweepConfig cfg;
  EXPECT_THROW(es::run_sweep(w, m, cm, es::testing::linear_timing(), cfg), es::ValidationError);
  cfg.batch_sizes = {8};
  cfg.distributions = {"gaussian"};
  EXPECT_THROW(es::run_sweep(w, m, cm, es::testing::linear_timing(), cfg), es::ValidationError);
  EXPECT_THROW(es::apply_distribution(w, "zipf:x"), es::ValidationError);
}

TEST(EstimateReport, RatioOfGmBoundMachines) {
  es::Workload w{"w", {make_table("t", 1000, 16, 2)}, 8192};
  auto a = make_machine(8, 1024, false);
  a.name = "fast";
  a.gm_bandwidth = 1.3e11;
  auto b = a;
  b.name = "slow";
  b.gm_bandwidth = 1e11;
  const auto r = es::estimate_report({a, b}, w);
  EXPECT_NEAR(r.ratio[0][1], 1.30, 1e-9);
  EXPECT_NEAR(r.ratio[1][0], 1 / 1.30, 1e-9);
  const auto csv = es::to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "machine,throughput_qps,vs_fast,vs_slow");
}

TEST(EstimateReport, SingleMachineHasNoRatioColumn) {
  es::Workload w{"w", {make_table("t", 1000, 16, 2)}, 8192};
  const auto csv = es::to_csv(es::estimate_report({make_machine(8, 1024)}, w));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "machine,throughput_qps");
  EXPECT_THROW(es::estimate_report({}, w), es::ValidationError);
}

TEST(EstimateReport, PersistenceOnBeatsOffWhenResident) {
  es::Workload w{"w", {make_table("a", 100, 16, 2), make_table("b", 300, 16, 2)}, 8192};
  auto on = make_machine(8, 1 << 20, true);
  on.name = "on";
  on.l1_bandwidth = 2e11;
  auto off = on;
  off.name = "off";
  off.l1_persistence = false;
  const auto r = es::estimate_report({on, off}, w);
  EXPECT_GE(r.ratio[0][1], 1.0);
}
