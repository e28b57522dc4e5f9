// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "embedshard/calibration.hpp"
#include "embedshard/costmodel.hpp"
#include "embedshard/engine.hpp"
#include "embedshard/error.hpp"
#include "embedshard/io.hpp"
#include "embedshard/machine.hpp"
#include "embedshard/parallel.hpp"
#include "embedshard/partitioner.hpp"
#include "embedshard/rng.hpp"
#include "embedshard/stats.hpp"
#include "embedshard/strategy.hpp"
#include "embedshard/sweep.hpp"
#include "embedshard/workload.hpp"
