// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#include "icnn/gradcheck.hpp"

#include <cmath>
#include <ostream>

#include "icnn/errors.hpp"
#include "icnn/irrconv.hpp"
#include "icnn/oracle.hpp"

namespace icnn {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kIntegerMargin = 1e-3;

using Vec = Eigen::VectorXd;

double fractional_distance(double x) {
  const double f = x - std::floor(x);
  return std::min(f, 1.0 - f);
}

/// Integer grid plus a uniform jitter, every coordinate at least
/// kIntegerMargin away from any integer.
PositionSet<double> random_positions(Index grid_rows, Index grid_cols, Index channels, Rng& rng) {
  PositionSet<double> p = init_positions<double>(grid_rows, grid_cols, 0.0, channels);
  auto jitter = [&](double base) {
    double x;
    do {
      x = base + (rng.uniform() - 0.5) * 0.9;
    } while (fractional_distance(x) < kIntegerMargin);
    return x;
  };
  for (Index c = 0; c < p.channels(); ++c)
    for (Index i = 0; i < p.taps(); ++i) {
      p.row_offsets(c, i) = jitter(p.row_offsets(c, i));
      p.col_offsets(c, i) = jitter(p.col_offsets(c, i));
    }
  return p;
}

double weighted_output_sum(const Tensord& input, const IrregularKernel<double>& kernel,
                           const Tensord& seed_grad) {
  const Tensord out = forward(input, kernel);
  double acc = 0;
  for (Index i = 0; i < out.size(); ++i) acc += out.data()[i] * seed_grad.data()[i];
  return acc;
}

}  // namespace

GradCheckReport run_gradcheck(std::uint64_t seed, std::int64_t trials, double tolerance) {
  if (trials < 1) throw ArgumentError("run_gradcheck: trials must be >= 1");

  Rng rng(seed);
  GradCheckReport report;
  report.trials = trials;
  report.tolerance = tolerance;

  for (std::int64_t trial = 0; trial < trials; ++trial) {
    const Index batch = rng.uniform_int(1, 2);
    const Index c_in = rng.uniform_int(1, 3);
    const Index c_out = rng.uniform_int(1, 3);
    const Index grid_rows = rng.uniform_int(1, 3);
    const Index grid_cols = rng.uniform_int(1, 3);
    const auto stride_r = static_cast<int>(rng.uniform_int(1, 2));
    const auto stride_c = static_cast<int>(rng.uniform_int(1, 2));
    const Index in_h = rng.uniform_int(grid_rows, 8);
    const Index in_w = rng.uniform_int(grid_cols, 8);

    IrregularKernel<double> kernel;
    kernel.positions = random_positions(grid_rows, grid_cols, c_in, rng);
    kernel.stride = {stride_r, stride_c};
    const Index n = kernel.positions.taps();
    kernel.weights.resize(c_out, c_in * n);
    for (Index r = 0; r < c_out; ++r)
      for (Index c = 0; c < c_in * n; ++c) kernel.weights(r, c) = rng.normal();

    Tensord input = Tensord::randn({batch, c_in, in_h, in_w}, rng, 1.0);
    const auto [out_h, out_w] = conv_output_extents(in_h, in_w, grid_rows, grid_cols, kernel.stride);
    Tensord seed_grad = Tensord::randn({batch, c_out, out_h, out_w}, rng, 1.0);

    const PatchMatrix<double> patches = im2col_irregular(input, kernel.positions, kernel.stride);
    const RowMatrix<double> grad_w = backward_weights(seed_grad, patches);
    const Tensord grad_in = backward_input(seed_grad, kernel, patches);
    const PositionGradient<double> grad_p = backward_positions(seed_grad, kernel, input, patches);

    // Weights.
    {
      Vec x(kernel.weights.size());
      for (Index r = 0; r < c_out; ++r)
        for (Index c = 0; c < c_in * n; ++c) x(r * c_in * n + c) = kernel.weights(r, c);
      oracle::ScalarFunction<double> f = [&](const Vec& v) {
        IrregularKernel<double> k = kernel;
        for (Index r = 0; r < c_out; ++r)
          for (Index c = 0; c < c_in * n; ++c) k.weights(r, c) = v(r * c_in * n + c);
        return weighted_output_sum(input, k, seed_grad);
      };
      const Vec fd = oracle::finite_diff_grad<double>(f, x, kFdStep);
      for (Index r = 0; r < c_out; ++r)
        for (Index c = 0; c < c_in * n; ++c)
          report.max_rel_err_weights = std::max(
              report.max_rel_err_weights, oracle::relative_error(grad_w(r, c), fd(r * c_in * n + c)));
    }

    // Input.
    {
      Vec x(input.size());
      for (Index i = 0; i < input.size(); ++i) x(i) = input.data()[i];
      oracle::ScalarFunction<double> f = [&](const Vec& v) {
        Tensord probe = input;
        for (Index i = 0; i < probe.size(); ++i) probe.data()[i] = v(i);
        return weighted_output_sum(probe, kernel, seed_grad);
      };
      const Vec fd = oracle::finite_diff_grad<double>(f, x, kFdStep);
      for (Index i = 0; i < input.size(); ++i)
        report.max_rel_err_input =
            std::max(report.max_rel_err_input, oracle::relative_error(grad_in.data()[i], fd(i)));
    }

    // Positions (row coordinates first, then columns).
    {
      Vec x(2 * c_in * n);
      for (Index c = 0; c < c_in; ++c)
        for (Index i = 0; i < n; ++i) {
          x(c * n + i) = kernel.positions.row_offsets(c, i);
          x(c_in * n + c * n + i) = kernel.positions.col_offsets(c, i);
        }
      oracle::ScalarFunction<double> f = [&](const Vec& v) {
        IrregularKernel<double> k = kernel;
        for (Index c = 0; c < c_in; ++c)
          for (Index i = 0; i < n; ++i) {
            k.positions.row_offsets(c, i) = v(c * n + i);
            k.positions.col_offsets(c, i) = v(c_in * n + c * n + i);
          }
        return weighted_output_sum(input, k, seed_grad);
      };
      const Vec fd = oracle::finite_diff_grad<double>(f, x, kFdStep);
      for (Index c = 0; c < c_in; ++c)
        for (Index i = 0; i < n; ++i) {
          report.max_rel_err_positions = std::max(
              report.max_rel_err_positions, oracle::relative_error(grad_p.row(c, i), fd(c * n + i)));
          report.max_rel_err_positions =
              std::max(report.max_rel_err_positions,
                       oracle::relative_error(grad_p.col(c, i), fd(c_in * n + c * n + i)));
        }
    }
  }
  return report;
}

void print_gradcheck_report(std::ostream& os, const GradCheckReport& report) {
  auto line = [&](const char* name, double err, bool ok) {
    os << name << ": max_rel_err=" << err << " tolerance=" << report.tolerance << " "
       << (ok ? "PASS" : "FAIL") << "\n";
  };
  os << "gradcheck trials=" << report.trials << "\n";
  line("weights  ", report.max_rel_err_weights, report.weights_ok());
  line("input    ", report.max_rel_err_input, report.input_ok());
  line("positions", report.max_rel_err_positions, report.positions_ok());
}

}  // namespace icnn
