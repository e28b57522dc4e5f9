// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "test_support.hpp"

namespace es = embedshard;
using es::StrategyKind;

namespace {

void expect_rel(double got, double want, double rel) {
  EXPECT_LE(std::abs(got - want), rel * std::abs(want)) << "got " << got << " want " << want;
}

// Solves the normal equations (X^T X) b = X^T y by Gaussian elimination in
// long double. Independent of the library's QR path.
std::vector<long double> normal_equations(const std::vector<std::vector<long double>>& x,
                                          const std::vector<long double>& y) {
  const std::size_t p = x.front().size();
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += x[i][r] * x[i][c];
      a[r][p] += x[i][r] * y[i];
    }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<long double> b(p);
  for (std::size_t r = 0; r < p; ++r) b[r] = a[r][p] / a[r][r];
  return b;
}

}  // namespace

TEST(Strategy, NamesRoundTrip) {
  for (auto s : es::kAllStrategies) EXPECT_EQ(es::parse_strategy(es::to_string(s)), s);
  EXPECT_EQ(es::parse_strategy("GM_UB"), StrategyKind::GM_UB);
  EXPECT_EQ(es::parse_strategy("L1-UB"), StrategyKind::L1_UB);
  EXPECT_THROW(es::parse_strategy("L2"), es::ParseError);
}

TEST(EstimateTableCost, Examples) {
  const es::Coefficients c{1e-6, 2e-9, 0};
  EXPECT_DOUBLE_EQ(es::estimate_table_cost(c, StrategyKind::GM, 256, 0), 1.512e-6);
  const es::Coefficients u{1e-6, 2e-9, 3e-9};
  EXPECT_DOUBLE_EQ(es::estimate_table_cost(u, StrategyKind::GM_UB, 256, 1000), 4.512e-6);
  for (auto s : es::kAllStrategies) EXPECT_EQ(es::estimate_table_cost(u, s, 0, 0), 1e-6);
}

TEST(EstimateTableCost, NonUbIgnoresRows) {
  const es::Coefficients c{1e-6, 2e-9, 3e-9};
  for (auto s : {StrategyKind::GM, StrategyKind::L1})
    EXPECT_EQ(es::estimate_table_cost(c, s, 100, 0), es::estimate_table_cost(c, s, 100, 1e6));
}

TEST(EstimateTableCost, Affine) {
  const es::Coefficients c{1e-6, 2e-9, 3e-9};
  for (auto s : es::kAllStrategies)
    for (double a : {2.0, 3.0, 10.0}) {
      const double base = es::estimate_table_cost(c, s, 0, 50);
      const double one = es::estimate_table_cost(c, s, 128, 50) - base;
      const double scaled = es::estimate_table_cost(c, s, 128 * a, 50) - base;
      EXPECT_NEAR(scaled, a * one, 1e-20);
    }
}

TEST(CostModel, MissingCoefficientsNameStrategyAndDim) {
  es::CostModel cm;
  cm.set("m", StrategyKind::GM, 16, {1, 1, 0});
  try {
    cm.estimate("m", StrategyKind::L1_UB, 16, 1, 1);
    ADD_FAILURE();
  } catch (const es::CostModelError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("L1-UB"), std::string::npos);
    EXPECT_NE(msg.find("embed_dim=16"), std::string::npos);
  }
  EXPECT_THROW(cm.estimate("m", StrategyKind::GM, 32, 1, 1), es::CostModelError);
  EXPECT_THROW(cm.estimate("other", StrategyKind::GM, 16, 1, 1), es::CostModelError);
}

TEST(Fit, RecoversGmCoefficients) {
  std::vector<es::Measurement> ms;
  for (std::uint64_t l : {100, 200, 400}) ms.push_back({StrategyKind::GM, l, 0, 5e-6 + 1e-9 * l});
  const auto r = es::fit(ms, StrategyKind::GM);
  expect_rel(r.coefficients.beta0, 5e-6, 1e-12);
  expect_rel(r.coefficients.beta1, 1e-9, 1e-12);
  EXPECT_EQ(r.coefficients.beta2, 0.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Fit, RecoversBeta2WithFixedLookups) {
  std::vector<es::Measurement> ms;
  for (std::uint64_t rows : {10, 20, 30}) ms.push_back({StrategyKind::GM_UB, 64, rows, 7e-9 * rows});
  const auto r = es::fit(ms, StrategyKind::GM_UB);
  expect_rel(r.coefficients.beta2, 7e-9, 1e-12);
  EXPECT_EQ(r.coefficients.beta1, 0.0);
  EXPECT_NEAR(r.coefficients.beta0, 0.0, 1e-20);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings.front().find("lookups"), std::string::npos);
}

TEST(Fit, RankDeficiency) {
  const es::Measurement m{StrategyKind::GM_UB, 64, 10, 1e-6};
  try {
    es::fit({m, m}, StrategyKind::GM_UB);
    ADD_FAILURE();
  } catch (const es::CostModelError& e) {
    EXPECT_NE(std::string(e.what()).find("rank deficiency"), std::string::npos);
  }
  const es::Measurement g{StrategyKind::GM, 64, 0, 1e-6};
  EXPECT_THROW(es::fit({g, g, g}, StrategyKind::GM), es::CostModelError);
  // Measurements of other strategies do not count.
  EXPECT_THROW(es::fit({g, {StrategyKind::L1, 2, 0, 1e-6}}, StrategyKind::L1), es::CostModelError);
}

TEST(Fit, RejectsNonPositiveObservations) {
  std::vector<es::Measurement> ms{{StrategyKind::GM, 1, 0, 1e-6}, {StrategyKind::GM, 2, 0, 0.0}};
  EXPECT_THROW(es::fit(ms, StrategyKind::GM), es::CostModelError);
}

TEST(Fit, ClampsNegativeCoefficients) {
  std::vector<es::Measurement> ms;
  for (std::uint64_t l : {1, 2, 3}) ms.push_back({StrategyKind::L1, l, 0, 2e-9 * l - 1e-9});
  const auto r = es::fit(ms, StrategyKind::L1);
  EXPECT_EQ(r.coefficients.beta0, 0.0);
  expect_rel(r.coefficients.beta1, 2e-9, 1e-12);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("clamped"), std::string::npos);
  // Residuals are those of the unclamped fit.
  for (double x : r.residuals) EXPECT_NEAR(x, 0.0, 1e-20);
}

TEST(Fit, ResidualsMatchNormalEquations) {
  es::CounterRng rng(5);
  for (auto s : es::kAllStrategies) {
    std::vector<es::Measurement> ms;
    for (int i = 0; i < 20; ++i) {
      const std::uint64_t l = 1 + rng.next_below(5000);
      const std::uint64_t rows = 1 + rng.next_below(10000);
      const double noise = 1e-7 * (rng.next_unit() - 0.5);
      ms.push_back({s, l, rows, 1e-5 + 2e-9 * l + (es::is_ub(s) ? 3e-10 * rows : 0.0) + noise});
    }
    const auto r = es::fit(ms, s);
    std::vector<std::vector<long double>> x;
    std::vector<long double> y;
    for (const auto& m : ms) {
      std::vector<long double> row{1.0L, static_cast<long double>(m.lookups)};
      if (es::is_ub(s)) row.push_back(static_cast<long double>(m.rows));
      x.push_back(row);
      y.push_back(m.observed_p99);
    }
    const auto b = normal_equations(x, y);
    expect_rel(r.coefficients.beta0, static_cast<double>(b[0]), 1e-7);
    expect_rel(r.coefficients.beta1, static_cast<double>(b[1]), 1e-7);
    if (es::is_ub(s)) expect_rel(r.coefficients.beta2, static_cast<double>(b[2]), 1e-7);
    ASSERT_EQ(r.residuals.size(), ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const double fitted = es::estimate_table_cost(r.coefficients, s, ms[i].lookups, ms[i].rows);
      EXPECT_NEAR(ms[i].observed_p99 - fitted, r.residuals[i], 1e-15);
    }
  }
}

TEST(Fit, NoiselessRecoveryAllStrategies) {
  es::CounterRng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto s : es::kAllStrategies) {
      const es::Coefficients truth{1e-6 * (1 + rng.next_unit()), 1e-9 * (1 + rng.next_unit()),
                                   es::is_ub(s) ? 1e-10 * (1 + rng.next_unit()) : 0.0};
      std::vector<es::Measurement> ms;
      for (int i = 0; i < 8; ++i) {
        const std::uint64_t l = 1 + rng.next_below(100000);
        const std::uint64_t rows = 1 + rng.next_below(100000);
        ms.push_back({s, l, rows, es::estimate_table_cost(truth, s, l, rows)});
      }
      const auto r = es::fit(ms, s);
      expect_rel(r.coefficients.beta0, truth.beta0, 1e-9);
      expect_rel(r.coefficients.beta1, truth.beta1, 1e-9);
      if (es::is_ub(s)) expect_rel(r.coefficients.beta2, truth.beta2, 1e-9);
    }
  }
}

TEST(MeasureForFit, CardinalityAndDeterminism) {
  const auto m = es::testing::make_machine(4, 1 << 20);
  const auto t = es::testing::make_table("probe", 1024, 16, 2);
  const std::vector<es::GridPoint> grid{{64, 4}, {128, 4}, {256, 2}, {512, 1}};
  auto timing = es::testing::linear_timing();
  timing.jitter = 0.2;
  for (auto s : es::kAllStrategies) {
    const auto a = es::measure_for_fit(m, t, s, grid, timing, 100, 3);
    const auto b = es::measure_for_fit(m, t, s, grid, timing, 100, 3);
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].lookups, b[i].lookups);
      EXPECT_EQ(a[i].observed_p99, b[i].observed_p99);
      EXPECT_EQ(a[i].strategy, s);
    }
    EXPECT_EQ(a[0].lookups, 16u);
    EXPECT_EQ(a[3].lookups, 512u);
  }
  EXPECT_THROW(es::measure_for_fit(m, t, StrategyKind::GM, grid, timing, 99), es::Error);
}

TEST(Calibrate, ClosedLoopRecoversEngineCoefficients) {
  const auto m = es::testing::make_machine(4, 1 << 20);
  es::Workload w{"w", {es::testing::make_table("t", 100, 16, 2)}, 8};
  const auto timing = es::testing::linear_timing();
  es::CalibrationSettings settings;
  settings.probe_rows = {256, 1024, 4096};
  settings.probe_batches = {64, 256, 1024};
  const auto r = es::calibrate(m, w, timing, settings);

  // Hand-derived engine coefficients for 32-byte rows.
  const double row = 32.0;
  const double pool = row * timing.pool_byte_s;
  const double gm_transfer = timing.gm_row_latency_s + 32.0 * timing.gm_byte_s;
  const double l1_transfer = timing.l1_row_latency_s + row * timing.l1_byte_s;
  const std::array<es::Coefficients, 4> expected{{
      {timing.launch_s[0] + std::min(gm_transfer, pool), std::max(gm_transfer, pool), 0},
      {timing.launch_s[1], row * timing.ub_lookup_byte_s, row * timing.chunk_stage_in_cost},
      {timing.launch_s[2] + std::min(l1_transfer, pool), std::max(l1_transfer, pool), 0},
      {timing.launch_s[3], row * timing.ub_lookup_byte_s, row * timing.l1_stage_byte_s},
  }};
  for (auto s : es::kAllStrategies) {
    const auto& got = r.model.coefficients("test", s, 16);
    const auto& want = expected[es::index_of(s)];
    SCOPED_TRACE(std::string(es::to_string(s)));
    expect_rel(got.beta0, want.beta0, 1e-9);
    expect_rel(got.beta1, want.beta1, 1e-9);
    if (es::is_ub(s)) expect_rel(got.beta2, want.beta2, 1e-9);
  }
}

TEST(Calibrate, SkipsL1WithoutPersistence) {
  const auto m = es::testing::make_machine(2, 1 << 20, false);
  es::Workload w{"w", {es::testing::make_table("t", 100, 8, 4)}, 8};
  es::CalibrationSettings settings;
  settings.probe_rows = {128, 512, 2048};
  settings.probe_batches = {32, 128};
  const auto r = es::calibrate(m, w, es::testing::linear_timing(), settings);
  EXPECT_NE(r.model.find("test", StrategyKind::GM, 8), nullptr);
  EXPECT_NE(r.model.find("test", StrategyKind::GM_UB, 8), nullptr);
  EXPECT_EQ(r.model.find("test", StrategyKind::L1, 8), nullptr);
}
