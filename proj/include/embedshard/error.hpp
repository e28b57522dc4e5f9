// Copyright 2026 The EmbedShard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace embedshard {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or document.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Cost model lookup or fitting failure.
class CostModelError : public Error {
 public:
  using Error::Error;
};

/// Planner could not produce a plan, or a plan does not match its inputs.
class PlanError : public Error {
 public:
  using Error::Error;
};

}  // namespace embedshard
