// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>

#include "icnn/tensor.hpp"

namespace icnn {

struct GradCheckReport {
  std::int64_t trials{0};
  double max_rel_err_weights{0};
  double max_rel_err_input{0};
  double max_rel_err_positions{0};
  double tolerance{1e-4};

  bool weights_ok() const { return max_rel_err_weights < tolerance; }
  bool input_ok() const { return max_rel_err_input < tolerance; }
  bool positions_ok() const { return max_rel_err_positions < tolerance; }
  bool all_ok() const { return weights_ok() && input_ok() && positions_ok(); }
};

/// Compares the analytic weight, input and position gradients of random
/// small conv instances (input up to 8x8, up to 3 channels, up to 9 taps)
/// against central finite differences of a random-weighted sum of outputs.
/// Position coordinates are resampled until every one is at least 1e-3 from
/// an integer, so the finite-difference step of 1e-5 never crosses an
/// interpolation cell.
GradCheckReport run_gradcheck(std::uint64_t seed, std::int64_t trials, double tolerance = 1e-4);

/// Human-readable pass/fail lines, one per parameter class.
void print_gradcheck_report(std::ostream& os, const GradCheckReport& report);

}  // namespace icnn
