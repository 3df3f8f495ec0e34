// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace icnn {

/// Shape or extent mismatch between operands.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Requested allocation exceeds addressable size.
struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument value (non-finite coordinate, bad range, ...).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Operation called in the wrong order (e.g. backward before forward).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Malformed file content.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem read/write failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite value produced where a finite one is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid training configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace icnn
