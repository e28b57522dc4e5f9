// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "embedshard/error.hpp"
#include "embedshard/strategy.hpp"

namespace embedshard {

/// Linear P99 coefficients for one (machine, strategy, embed_dim).
///   cost = beta0 + beta1 * lookups               (GM, L1)
///   cost = beta0 + beta1 * lookups + beta2 * rows (GM-UB, L1-UB)
/// `lookups` is what one core handles; `rows` is the staged row count.
struct Coefficients {
  double beta0 = 0.0;  // s
  double beta1 = 0.0;  // s per lookup
  double beta2 = 0.0;  // s per table row, UB variants only
  friend bool operator==(const Coefficients&, const Coefficients&) = default;
};

inline double estimate_table_cost(const Coefficients& c, StrategyKind s, double lookups,
                                  double rows) {
  double cost = c.beta0 + c.beta1 * lookups;
  if (is_ub(s)) cost += c.beta2 * rows;
  return cost;
}

struct CostKey {
  std::string machine;
  StrategyKind strategy = StrategyKind::GM;
  std::uint32_t embed_dim = 0;
  friend auto operator<=>(const CostKey&, const CostKey&) = default;
};

/// Coefficient table keyed by (machine, strategy, embed_dim).
class CostModel {
 public:
  void set(const CostKey& key, const Coefficients& c) { table_[key] = c; }

  void set(const std::string& machine, StrategyKind s, std::uint32_t embed_dim,
           const Coefficients& c) {
    set(CostKey{machine, s, embed_dim}, c);
  }

  const Coefficients* find(const std::string& machine, StrategyKind s,
                           std::uint32_t embed_dim) const {
    auto it = table_.find(CostKey{machine, s, embed_dim});
    return it == table_.end() ? nullptr : &it->second;
  }

  const Coefficients& coefficients(const std::string& machine, StrategyKind s,
                                   std::uint32_t embed_dim) const {
    if (const auto* c = find(machine, s, embed_dim)) return *c;
    throw CostModelError("no cost coefficients for (" + std::string(to_string(s)) +
                         ", embed_dim=" + std::to_string(embed_dim) + ") on machine '" +
                         machine + "'");
  }

  double estimate(const std::string& machine, StrategyKind s, std::uint32_t embed_dim,
                  double lookups, double rows) const {
    return estimate_table_cost(coefficients(machine, s, embed_dim), s, lookups, rows);
  }

  const std::map<CostKey, Coefficients>& entries() const noexcept { return table_; }
  bool empty() const noexcept { return table_.empty(); }

  void merge(const CostModel& other) {
    for (const auto& [k, v] : other.table_) table_[k] = v;
  }

 private:
  std::map<CostKey, Coefficients> table_;
};

/// Same helper with the cost-model lookup folded in.
inline double estimate_table_cost(const CostModel& cm, const std::string& machine,
                                  StrategyKind s, std::uint32_t embed_dim, double lookups,
                                  double rows) {
  return cm.estimate(machine, s, embed_dim, lookups, rows);
}

struct Measurement {
  StrategyKind strategy = StrategyKind::GM;
  std::uint64_t lookups = 1;  // per-core lookups, ceil(B/K) * s
  std::uint64_t rows = 0;     // staged rows (UB variants)
  double observed_p99 = 0.0;  // s
};

struct FitResult {
  Coefficients coefficients;
  std::vector<double> residuals;  // observed - fitted, before clamping
  std::vector<std::string> warnings;
};

/// Ordinary least squares for one strategy; measurements of other
/// strategies are ignored. Non-UB fits exclude the rows regressor.
///
/// A regressor that is constant across the data cannot be separated from
/// the intercept: its coefficient is pinned to 0 (with a warning) as long
/// as at least one regressor remains. Fewer measurements than coefficients
/// or a singular remaining design raise CostModelError. Negative fitted
/// coefficients are clamped to 0 with a warning.
inline FitResult fit(const std::vector<Measurement>& measurements, StrategyKind strategy) {
  std::vector<const Measurement*> data;
  for (const auto& m : measurements)
    if (m.strategy == strategy) data.push_back(&m);

  const std::string label(to_string(strategy));
  const std::size_t coeffs = is_ub(strategy) ? 3 : 2;
  if (data.size() < coeffs) {
    throw CostModelError("fit(" + label + "): underdetermined design, " +
                         std::to_string(data.size()) + " measurements for " +
                         std::to_string(coeffs) + " coefficients (rank deficiency)");
  }
  for (const auto* m : data) {
    if (!(m->observed_p99 > 0.0) || !std::isfinite(m->observed_p99))
      throw CostModelError("fit(" + label + "): observed_p99 must be > 0");
  }

  FitResult result;
  const auto n = static_cast<Eigen::Index>(data.size());
  auto regressor = [&](std::size_t col, const Measurement& m) {
    return col == 1 ? static_cast<double>(m.lookups) : static_cast<double>(m.rows);
  };

  // Column 0 is the intercept; keep regressors that actually vary.
  std::vector<std::size_t> active{0};
  for (std::size_t col = 1; col < coeffs; ++col) {
    const double first = regressor(col, *data.front());
    const bool varies = std::any_of(data.begin(), data.end(), [&](const Measurement* m) {
      return regressor(col, *m) != first;
    });
    if (varies) {
      active.push_back(col);
    } else {
      result.warnings.push_back("fit(" + label + "): " +
                                (col == 1 ? std::string("lookups") : std::string("rows")) +
                                " is constant across measurements; beta" +
                                std::to_string(col) + " pinned to 0");
    }
  }
  if (active.size() == 1) {
    throw CostModelError("fit(" + label +
                         "): singular design, no regressor varies (rank deficiency: rank 1 < " +
                         std::to_string(coeffs) + ")");
  }

  const auto p = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Measurement& m = *data[static_cast<std::size_t>(i)];
    y(i) = m.observed_p99;
    for (Eigen::Index j = 0; j < p; ++j) {
      const std::size_t col = active[static_cast<std::size_t>(j)];
      x(i, j) = col == 0 ? 1.0 : regressor(col, m);
    }
  }

  // Equilibrate columns so the rank test is scale-free.
  Eigen::VectorXd scale = x.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (scale(j) == 0.0) scale(j) = 1.0;
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw CostModelError("fit(" + label + "): singular design (rank deficiency: rank " +
                         std::to_string(qr.rank()) + " < " + std::to_string(p) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(y).cwiseQuotient(scale);
  const Eigen::VectorXd resid = y - x * beta;
  result.residuals.assign(resid.data(), resid.data() + n);

  double out[3] = {0.0, 0.0, 0.0};
  for (Eigen::Index j = 0; j < p; ++j) out[active[static_cast<std::size_t>(j)]] = beta(j);
  for (int k = 0; k < 3; ++k) {
    if (out[k] < 0.0) {
      result.warnings.push_back("fit(" + label + "): beta" + std::to_string(k) + " = " +
                                std::to_string(out[k]) + " clamped to 0");
      out[k] = 0.0;
    }
  }
  result.coefficients = Coefficients{out[0], out[1], out[2]};
  return result;
}

}  // namespace embedshard
