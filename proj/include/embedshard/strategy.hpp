// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "embedshard/error.hpp"

namespace embedshard {

/// Per-table data flow. GM/L1 read one row at a time (double buffered) from
/// global memory or from a table persisted in L1; the UB variants stage the
/// table through the vector buffer and gather rows with the vector unit.
enum class StrategyKind : std::uint8_t { GM, GM_UB, L1, L1_UB };

inline constexpr std::array<StrategyKind, 4> kAllStrategies = {
    StrategyKind::GM, StrategyKind::GM_UB, StrategyKind::L1, StrategyKind::L1_UB};

constexpr bool is_ub(StrategyKind s) noexcept {
  return s == StrategyKind::GM_UB || s == StrategyKind::L1_UB;
}

constexpr bool is_l1(StrategyKind s) noexcept {
  return s == StrategyKind::L1 || s == StrategyKind::L1_UB;
}

constexpr bool is_gm(StrategyKind s) noexcept { return !is_l1(s); }

constexpr std::size_t index_of(StrategyKind s) noexcept { return static_cast<std::size_t>(s); }

constexpr std::string_view to_string(StrategyKind s) noexcept {
  switch (s) {
    case StrategyKind::GM: return "GM";
    case StrategyKind::GM_UB: return "GM-UB";
    case StrategyKind::L1: return "L1";
    case StrategyKind::L1_UB: return "L1-UB";
  }
  return "?";
}

/// Accepts "GM-UB" and "GM_UB" spellings, case-sensitive.
inline StrategyKind parse_strategy(std::string_view s) {
  if (s == "GM") return StrategyKind::GM;
  if (s == "GM-UB" || s == "GM_UB") return StrategyKind::GM_UB;
  if (s == "L1") return StrategyKind::L1;
  if (s == "L1-UB" || s == "L1_UB") return StrategyKind::L1_UB;
  throw ParseError("unknown strategy '" + std::string(s) + "'");
}

}  // namespace embedshard
