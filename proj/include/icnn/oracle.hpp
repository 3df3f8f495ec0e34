// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations for verification: direct convolution
// at integer taps, direct bilinear sampling, and central finite differences.
// Deliberately shares no arithmetic with the main path; keep it that way.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <string>

#include "icnn/errors.hpp"
#include "icnn/tensor.hpp"

namespace icnn::oracle {

/// Evaluatable map from a flat parameter vector to a scalar loss.
template <typename Scalar>
using ScalarFunction = std::function<Scalar(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>;

/// Valid convolution with integer taps spaced by `dilation`, six nested
/// loops, no padding. Weights are packed (c_out, c_in, kernel_h, kernel_w)
/// into the rank-4 tensor slots.
template <typename Scalar>
Tensor<Scalar> naive_conv(const Tensor<Scalar>& input, const Tensor<Scalar>& weights, int dilation,
                          std::pair<int, int> stride) {
  if (dilation < 1) throw ArgumentError("naive_conv: dilation must be >= 1");
  if (stride.first < 1 || stride.second < 1) throw ArgumentError("naive_conv: stride must be >= 1");
  if (input.shape().channels != weights.shape().channels)
    throw ShapeError("naive_conv: channel mismatch");

  const Index kh = weights.shape().height;
  const Index kw = weights.shape().width;
  const Index span_h = dilation * (kh - 1) + 1;
  const Index span_w = dilation * (kw - 1) + 1;
  const Index out_h = (input.shape().height - span_h) / stride.first + 1;
  const Index out_w = (input.shape().width - span_w) / stride.second + 1;
  if (input.shape().height < span_h || input.shape().width < span_w || out_h < 1 || out_w < 1)
    throw ShapeError("naive_conv: output extent < 1");

  Tensor<Scalar> out({input.shape().batch, weights.shape().batch, out_h, out_w});
  for (Index b = 0; b < input.shape().batch; ++b)
    for (Index co = 0; co < weights.shape().batch; ++co)
      for (Index r = 0; r < out_h; ++r)
        for (Index c = 0; c < out_w; ++c) {
          Scalar acc = 0;
          for (Index ci = 0; ci < input.shape().channels; ++ci)
            for (Index i = 0; i < kh; ++i)
              for (Index j = 0; j < kw; ++j)
                acc += weights(co, ci, i, j) *
                       input(b, ci, r * stride.first + dilation * i, c * stride.second + dilation * j);
          out(b, co, r, c) = acc;
        }
  return out;
}

/// Direct bilinear sample of one (batch, channel) plane at fractional
/// (row, col); neighbors outside the plane contribute zero.
template <typename Scalar>
Scalar naive_bilinear(const Tensor<Scalar>& input, Index b, Index c, Scalar row, Scalar col) {
  const Index h = input.shape().height;
  const Index w = input.shape().width;
  const auto r0 = static_cast<Index>(std::floor(static_cast<double>(row)));
  const auto c0 = static_cast<Index>(std::floor(static_cast<double>(col)));
  Scalar acc = 0;
  for (Index r = r0; r <= r0 + 1; ++r)
    for (Index cc = c0; cc <= c0 + 1; ++cc) {
      if (r < 0 || r >= h || cc < 0 || cc >= w) continue;
      const Scalar wr = Scalar(1) - (row >= Scalar(r) ? row - Scalar(r) : Scalar(r) - row);
      const Scalar wc = Scalar(1) - (col >= Scalar(cc) ? col - Scalar(cc) : Scalar(cc) - col);
      acc += wr * wc * input(b, c, r, cc);
    }
  return acc;
}

/// Central finite differences: component j is (f(x + h e_j) - f(x - h e_j)) / 2h.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> finite_diff_grad(const ScalarFunction<Scalar>& f,
                                                          const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
                                                          Scalar h) {
  if (!(h > Scalar(0))) throw ArgumentError("finite_diff_grad: h must be positive");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad(x.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe(j) = x(j) + h;
    const Scalar up = f(probe);
    probe(j) = x(j) - h;
    const Scalar down = f(probe);
    probe(j) = x(j);
    if (!std::isfinite(static_cast<double>(up)) || !std::isfinite(static_cast<double>(down)))
      throw NumericError("finite_diff_grad: non-finite evaluation at index " + std::to_string(j));
    grad(j) = (up - down) / (Scalar(2) * h);
  }
  return grad;
}

/// Relative-error metric used by all gradient comparisons.
template <typename Scalar>
Scalar relative_error(Scalar a, Scalar b) {
  const Scalar denom = std::max({std::abs(a), std::abs(b), Scalar(1e-8)});
  return std::abs(a - b) / denom;
}

}  // namespace icnn::oracle
