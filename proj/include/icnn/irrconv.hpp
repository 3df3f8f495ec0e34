// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0
//
// Convolution with learnable tap positions. A kernel carries, besides its
// weights, one fractional (row, col) offset per tap and input channel; taps
// sample the input by bilinear interpolation, so both weights and positions
// receive analytic gradients. Lowering follows the usual im2col scheme: the
// interpolated patches form a matrix and the convolution itself is a single
// matrix product.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <utility>

#include "icnn/errors.hpp"
#include "icnn/tensor.hpp"

namespace icnn {

template <typename Scalar>
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using ArrayXXi = Eigen::Array<Index, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-input-channel tap offsets, fractional pixels relative to the kernel
/// center. One set is shared by every output channel of a layer. The nominal
/// grid that seeded the set is kept because output extents and the kernel
/// center are defined by it, independent of where taps drift.
template <typename Scalar>
struct PositionSet {
  Index grid_rows{0};
  Index grid_cols{0};
  ArrayXX<Scalar> row_offsets;  // (c_in, n)
  ArrayXX<Scalar> col_offsets;  // (c_in, n)

  Index channels() const { return row_offsets.rows(); }
  Index taps() const { return row_offsets.cols(); }
  Index center_row() const { return (grid_rows - 1) / 2; }
  Index center_col() const { return (grid_cols - 1) / 2; }

  bool all_finite() const { return row_offsets.isFinite().all() && col_offsets.isFinite().all(); }
};

/// Centered integer grid with a constant shift added to every coordinate so
/// no tap starts exactly on an integer. Taps are ordered row-major over the
/// grid; every channel starts identical.
template <typename Scalar>
PositionSet<Scalar> init_positions(Index grid_rows, Index grid_cols, Scalar epsilon_init,
                                   Index channels = 1) {
  if (grid_rows < 1 || grid_cols < 1) throw ArgumentError("init_positions: grid extents must be >= 1");
  if (!(std::abs(static_cast<double>(epsilon_init)) < 0.5))
    throw ArgumentError("init_positions: |epsilon_init| must be < 0.5");
  if (channels < 1) throw ArgumentError("init_positions: channels must be >= 1");

  PositionSet<Scalar> p;
  p.grid_rows = grid_rows;
  p.grid_cols = grid_cols;
  const Index n = grid_rows * grid_cols;
  p.row_offsets.resize(channels, n);
  p.col_offsets.resize(channels, n);
  for (Index i = 0; i < grid_rows; ++i)
    for (Index j = 0; j < grid_cols; ++j) {
      const Index k = i * grid_cols + j;
      p.row_offsets.col(k).setConstant(static_cast<Scalar>(i - p.center_row()) + epsilon_init);
      p.col_offsets.col(k).setConstant(static_cast<Scalar>(j - p.center_col()) + epsilon_init);
    }
  return p;
}

/// Kernel = weights plus shared tap positions. Weights are stored as a
/// (c_out, c_in * n) matrix, taps fastest, so the forward pass is
/// patches * weights^T.
template <typename Scalar>
struct IrregularKernel {
  RowMatrix<Scalar> weights;
  PositionSet<Scalar> positions;
  std::pair<int, int> stride{1, 1};

  Index out_channels() const { return weights.rows(); }
  Index in_channels() const { return positions.channels(); }
};

/// Output extents of a valid convolution whose footprint is the nominal grid.
inline std::pair<Index, Index> conv_output_extents(Index in_h, Index in_w, Index grid_rows,
                                                   Index grid_cols, std::pair<int, int> stride) {
  const Index out_h = (in_h - grid_rows) / stride.first + 1;
  const Index out_w = (in_w - grid_cols) / stride.second + 1;
  if (in_h < grid_rows || in_w < grid_cols || out_h < 1 || out_w < 1)
    throw ShapeError("conv output extent < 1");
  return {out_h, out_w};
}

/// Interpolated input patches for every output location, one row per
/// (batch, out_row, out_col), one column per (channel, tap). The bilinear
/// cell of each tap is cached for the backward passes: because sampling
/// coordinates differ between output locations only by their integer origin,
/// the floor cell offset and the fractional parts are per-tap constants.
template <typename Scalar>
struct PatchMatrix {
  RowMatrix<Scalar> values;  // (batch * out_h * out_w, c_in * n)

  ArrayXXi cell_row;         // (c_in, n): center_row + floor(row offset)
  ArrayXXi cell_col;
  ArrayXX<Scalar> frac_row;  // (c_in, n): fractional part in [0, 1)
  ArrayXX<Scalar> frac_col;

  Index batch{0}, in_h{0}, in_w{0}, c_in{0}, n{0};
  Index out_h{0}, out_w{0};
  std::pair<int, int> stride{1, 1};

  Index rows() const { return batch * out_h * out_w; }
  Index row_index(Index b, Index r, Index c) const { return (b * out_h + r) * out_w + c; }
};

/// Bilinear sample of one plane at fractional (row, col), absolute
/// coordinates. The cell is (floor, floor+1) on each axis, also at integer
/// coordinates, where the upper neighbor just gets weight zero. Neighbors
/// outside the plane contribute zero.
template <typename Scalar>
Scalar interpolate(const Tensor<Scalar>& input, Scalar row, Scalar col, Index batch, Index channel) {
  if (!std::isfinite(static_cast<double>(row)) || !std::isfinite(static_cast<double>(col)))
    throw ArgumentError("interpolate: non-finite coordinate");
  const auto r0 = static_cast<Index>(std::floor(static_cast<double>(row)));
  const auto c0 = static_cast<Index>(std::floor(static_cast<double>(col)));
  const Scalar fr = row - static_cast<Scalar>(r0);
  const Scalar fc = col - static_cast<Scalar>(c0);

  const Index h = input.shape().height;
  const Index w = input.shape().width;
  const bool r0_ok = r0 >= 0 && r0 < h;
  const bool r1_ok = r0 + 1 >= 0 && r0 + 1 < h;
  const bool c0_ok = c0 >= 0 && c0 < w;
  const bool c1_ok = c0 + 1 >= 0 && c0 + 1 < w;

  Scalar acc = 0;
  if (r0_ok && c0_ok) acc += (Scalar(1) - fr) * (Scalar(1) - fc) * input(batch, channel, r0, c0);
  if (r0_ok && c1_ok) acc += (Scalar(1) - fr) * fc * input(batch, channel, r0, c0 + 1);
  if (r1_ok && c0_ok) acc += fr * (Scalar(1) - fc) * input(batch, channel, r0 + 1, c0);
  if (r1_ok && c1_ok) acc += fr * fc * input(batch, channel, r0 + 1, c0 + 1);
  return acc;
}

/// Gather the interpolated patch matrix. Each output location with origin
/// (k_r * stride_r, k_c * stride_c) samples every tap of every channel at
/// origin + center + offset.
template <typename Scalar>
PatchMatrix<Scalar> im2col_irregular(const Tensor<Scalar>& input, const PositionSet<Scalar>& positions,
                                     std::pair<int, int> stride) {
  if (input.shape().height < 1 || input.shape().width < 1)
    throw ShapeError("im2col_irregular: input spatial extents must be >= 1");
  if (input.shape().channels != positions.channels())
    throw ShapeError("im2col_irregular: channel mismatch");
  if (!positions.all_finite()) throw ArgumentError("im2col_irregular: non-finite position");

  PatchMatrix<Scalar> pm;
  pm.batch = input.shape().batch;
  pm.c_in = positions.channels();
  pm.n = positions.taps();
  pm.in_h = input.shape().height;
  pm.in_w = input.shape().width;
  pm.stride = stride;
  std::tie(pm.out_h, pm.out_w) =
      conv_output_extents(pm.in_h, pm.in_w, positions.grid_rows, positions.grid_cols, stride);

  pm.cell_row.resize(pm.c_in, pm.n);
  pm.cell_col.resize(pm.c_in, pm.n);
  pm.frac_row.resize(pm.c_in, pm.n);
  pm.frac_col.resize(pm.c_in, pm.n);
  for (Index c = 0; c < pm.c_in; ++c)
    for (Index i = 0; i < pm.n; ++i) {
      const double pr = static_cast<double>(positions.row_offsets(c, i));
      const double pc = static_cast<double>(positions.col_offsets(c, i));
      const auto fr0 = static_cast<Index>(std::floor(pr));
      const auto fc0 = static_cast<Index>(std::floor(pc));
      pm.cell_row(c, i) = positions.center_row() + fr0;
      pm.cell_col(c, i) = positions.center_col() + fc0;
      pm.frac_row(c, i) = positions.row_offsets(c, i) - static_cast<Scalar>(fr0);
      pm.frac_col(c, i) = positions.col_offsets(c, i) - static_cast<Scalar>(fc0);
    }

  pm.values.resize(pm.rows(), pm.c_in * pm.n);
  for (Index b = 0; b < pm.batch; ++b)
    for (Index ro = 0; ro < pm.out_h; ++ro)
      for (Index co = 0; co < pm.out_w; ++co) {
        const Index row = pm.row_index(b, ro, co);
        const Index origin_r = ro * stride.first;
        const Index origin_c = co * stride.second;
        for (Index c = 0; c < pm.c_in; ++c)
          for (Index i = 0; i < pm.n; ++i) {
            const Index r0 = origin_r + pm.cell_row(c, i);
            const Index c0 = origin_c + pm.cell_col(c, i);
            const Scalar fr = pm.frac_row(c, i);
            const Scalar fc = pm.frac_col(c, i);
            const bool r0_ok = r0 >= 0 && r0 < pm.in_h;
            const bool r1_ok = r0 + 1 >= 0 && r0 + 1 < pm.in_h;
            const bool c0_ok = c0 >= 0 && c0 < pm.in_w;
            const bool c1_ok = c0 + 1 >= 0 && c0 + 1 < pm.in_w;
            Scalar acc = 0;
            if (r0_ok && c0_ok) acc += (Scalar(1) - fr) * (Scalar(1) - fc) * input(b, c, r0, c0);
            if (r0_ok && c1_ok) acc += (Scalar(1) - fr) * fc * input(b, c, r0, c0 + 1);
            if (r1_ok && c0_ok) acc += fr * (Scalar(1) - fc) * input(b, c, r0 + 1, c0);
            if (r1_ok && c1_ok) acc += fr * fc * input(b, c, r0 + 1, c0 + 1);
            pm.values(row, c * pm.n + i) = acc;
          }
      }
  return pm;
}

/// Convolution given already-gathered patches: one matrix product, reshaped
/// to (batch, c_out, out_h, out_w).
template <typename Scalar>
Tensor<Scalar> apply_weights(const PatchMatrix<Scalar>& patches, const IrregularKernel<Scalar>& kernel) {
  if (kernel.weights.cols() != patches.c_in * patches.n)
    throw ShapeError("apply_weights: weight column count does not match patches");
  const RowMatrix<Scalar> out_mat = patches.values * kernel.weights.transpose();

  Tensor<Scalar> out({patches.batch, kernel.out_channels(), patches.out_h, patches.out_w});
  const Index plane = patches.out_h * patches.out_w;
  for (Index b = 0; b < patches.batch; ++b) {
    Eigen::Map<RowMatrix<Scalar>> dst(out.data() + out.offset(b, 0, 0, 0), kernel.out_channels(), plane);
    dst = out_mat.middleRows(b * plane, plane).transpose();
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> forward(const Tensor<Scalar>& input, const IrregularKernel<Scalar>& kernel) {
  if (input.shape().channels != kernel.in_channels())
    throw ShapeError("forward: input channels " + std::to_string(input.shape().channels) +
                     " do not match kernel c_in " + std::to_string(kernel.in_channels()));
  return apply_weights(im2col_irregular(input, kernel.positions, kernel.stride), kernel);
}

namespace detail {

/// Output-gradient tensor rearranged to match patch rows: (batch*out_h*out_w, c_out).
template <typename Scalar>
RowMatrix<Scalar> grad_out_matrix(const Tensor<Scalar>& grad_out, const PatchMatrix<Scalar>& patches) {
  if (grad_out.shape().batch != patches.batch || grad_out.shape().height != patches.out_h ||
      grad_out.shape().width != patches.out_w)
    throw ShapeError("grad_out shape " + grad_out.shape().str() + " does not match forward output");
  const Index plane = patches.out_h * patches.out_w;
  RowMatrix<Scalar> g(patches.rows(), grad_out.shape().channels);
  for (Index b = 0; b < patches.batch; ++b) {
    Eigen::Map<const RowMatrix<Scalar>> src(grad_out.data() + grad_out.offset(b, 0, 0, 0),
                                            grad_out.shape().channels, plane);
    g.middleRows(b * plane, plane) = src.transpose();
  }
  return g;
}

/// Gradient of the loss w.r.t. each interpolated patch value: grad_out * W.
template <typename Scalar>
RowMatrix<Scalar> patch_gradient(const Tensor<Scalar>& grad_out, const IrregularKernel<Scalar>& kernel,
                                 const PatchMatrix<Scalar>& patches) {
  if (grad_out.shape().channels != kernel.out_channels())
    throw ShapeError("grad_out channels do not match kernel c_out");
  return grad_out_matrix(grad_out, patches) * kernel.weights;
}

}  // namespace detail

/// dLoss/dW: plain accumulation of grad_out times the interpolated patch
/// values, identical to the weight gradient of a standard convolution.
template <typename Scalar>
RowMatrix<Scalar> backward_weights(const Tensor<Scalar>& grad_out, const PatchMatrix<Scalar>& patches) {
  return detail::grad_out_matrix(grad_out, patches).transpose() * patches.values;
}

/// dLoss/dInput: each patch gradient is scattered back through the four
/// bilinear weights of its cached cell; out-of-bounds neighbors get nothing.
template <typename Scalar>
Tensor<Scalar> backward_input(const Tensor<Scalar>& grad_out, const IrregularKernel<Scalar>& kernel,
                              const PatchMatrix<Scalar>& patches) {
  const RowMatrix<Scalar> pg = detail::patch_gradient(grad_out, kernel, patches);

  Tensor<Scalar> grad_in({patches.batch, patches.c_in, patches.in_h, patches.in_w});
  for (Index b = 0; b < patches.batch; ++b)
    for (Index ro = 0; ro < patches.out_h; ++ro)
      for (Index co = 0; co < patches.out_w; ++co) {
        const Index row = patches.row_index(b, ro, co);
        const Index origin_r = ro * patches.stride.first;
        const Index origin_c = co * patches.stride.second;
        for (Index c = 0; c < patches.c_in; ++c)
          for (Index i = 0; i < patches.n; ++i) {
            const Scalar g = pg(row, c * patches.n + i);
            if (g == Scalar(0)) continue;
            const Index r0 = origin_r + patches.cell_row(c, i);
            const Index c0 = origin_c + patches.cell_col(c, i);
            const Scalar fr = patches.frac_row(c, i);
            const Scalar fc = patches.frac_col(c, i);
            const bool r0_ok = r0 >= 0 && r0 < patches.in_h;
            const bool r1_ok = r0 + 1 >= 0 && r0 + 1 < patches.in_h;
            const bool c0_ok = c0 >= 0 && c0 < patches.in_w;
            const bool c1_ok = c0 + 1 >= 0 && c0 + 1 < patches.in_w;
            if (r0_ok && c0_ok) grad_in(b, c, r0, c0) += g * (Scalar(1) - fr) * (Scalar(1) - fc);
            if (r0_ok && c1_ok) grad_in(b, c, r0, c0 + 1) += g * (Scalar(1) - fr) * fc;
            if (r1_ok && c0_ok) grad_in(b, c, r0 + 1, c0) += g * fr * (Scalar(1) - fc);
            if (r1_ok && c1_ok) grad_in(b, c, r0 + 1, c0 + 1) += g * fr * fc;
          }
      }
  return grad_in;
}

/// Tap-position gradients, one (row, col) pair per (channel, tap).
template <typename Scalar>
struct PositionGradient {
  ArrayXX<Scalar> row;  // (c_in, n)
  ArrayXX<Scalar> col;
};

/// dLoss/dPositions. The derivative of a bilinear weight w.r.t. the sampling
/// coordinate is -sign(coordinate - neighbor) on the differentiated axis
/// times the other axis' weight; the sign at an exact integer coordinate is
/// taken as 0. Contributions sum over every output location and, because
/// positions are shared, over every output channel.
template <typename Scalar>
PositionGradient<Scalar> backward_positions(const Tensor<Scalar>& grad_out,
                                            const IrregularKernel<Scalar>& kernel,
                                            const Tensor<Scalar>& input,
                                            const PatchMatrix<Scalar>& patches) {
  if (input.shape().batch != patches.batch || input.shape().channels != patches.c_in ||
      input.shape().height != patches.in_h || input.shape().width != patches.in_w)
    throw ShapeError("backward_positions: input does not match forward pass");
  const RowMatrix<Scalar> pg = detail::patch_gradient(grad_out, kernel, patches);

  PositionGradient<Scalar> grad;
  grad.row = ArrayXX<Scalar>::Zero(patches.c_in, patches.n);
  grad.col = ArrayXX<Scalar>::Zero(patches.c_in, patches.n);

  for (Index b = 0; b < patches.batch; ++b)
    for (Index ro = 0; ro < patches.out_h; ++ro)
      for (Index co = 0; co < patches.out_w; ++co) {
        const Index row = patches.row_index(b, ro, co);
        const Index origin_r = ro * patches.stride.first;
        const Index origin_c = co * patches.stride.second;
        for (Index c = 0; c < patches.c_in; ++c)
          for (Index i = 0; i < patches.n; ++i) {
            const Scalar g = pg(row, c * patches.n + i);
            if (g == Scalar(0)) continue;
            const Index r0 = origin_r + patches.cell_row(c, i);
            const Index c0 = origin_c + patches.cell_col(c, i);
            const Scalar fr = patches.frac_row(c, i);
            const Scalar fc = patches.frac_col(c, i);
            const bool r0_ok = r0 >= 0 && r0 < patches.in_h;
            const bool r1_ok = r0 + 1 >= 0 && r0 + 1 < patches.in_h;
            const bool c0_ok = c0 >= 0 && c0 < patches.in_w;
            const bool c1_ok = c0 + 1 >= 0 && c0 + 1 < patches.in_w;
            const Scalar v00 = (r0_ok && c0_ok) ? input(b, c, r0, c0) : Scalar(0);
            const Scalar v01 = (r0_ok && c1_ok) ? input(b, c, r0, c0 + 1) : Scalar(0);
            const Scalar v10 = (r1_ok && c0_ok) ? input(b, c, r0 + 1, c0) : Scalar(0);
            const Scalar v11 = (r1_ok && c1_ok) ? input(b, c, r0 + 1, c0 + 1) : Scalar(0);
            // Lower neighbor's weight falls with the coordinate unless the
            // coordinate sits exactly on it (subgradient 0); the upper
            // neighbor's weight always grows.
            const Scalar dlo_r = fr > Scalar(0) ? Scalar(-1) : Scalar(0);
            const Scalar dlo_c = fc > Scalar(0) ? Scalar(-1) : Scalar(0);
            const Scalar gr =
                dlo_r * ((Scalar(1) - fc) * v00 + fc * v01) + ((Scalar(1) - fc) * v10 + fc * v11);
            const Scalar gc =
                dlo_c * ((Scalar(1) - fr) * v00 + fr * v10) + ((Scalar(1) - fr) * v01 + fr * v11);
            grad.row(c, i) += g * gr;
            grad.col(c, i) += g * gc;
          }
      }
  return grad;
}

}  // namespace icnn
