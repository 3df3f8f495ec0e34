// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icnn/errors.hpp"
#include "icnn/irrconv.hpp"
#include "icnn/tensor.hpp"

namespace icnn {

enum class LayerKind { irregular_conv, regular_conv, relu };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::irregular_conv: return "irregular_conv";
    case LayerKind::regular_conv: return "regular_conv";
    case LayerKind::relu: return "relu";
  }
  return "?";
}

struct LayerSpec {
  LayerKind kind{LayerKind::relu};
  Index c_in{0};
  Index c_out{0};
  std::pair<Index, Index> grid{0, 0};
  std::pair<int, int> stride{1, 1};
};

/// One materialized layer. Both conv kinds run through the same interpolated
/// path; a regular conv is simply pinned to the exact integer grid and its
/// positions are never updated. 1x1 kernels are dimension transforms, not
/// spatial extractors, and are only allowed as regular convs.
template <typename Scalar>
struct Layer {
  LayerSpec spec;
  IrregularKernel<Scalar> kernel;  // conv layers only
  bool positions_trainable{false};

  // caches from the last forward pass
  Tensor<Scalar> input_cache;
  PatchMatrix<Scalar> patches_cache;
  Tensor<Scalar> output_cache;  // relu: pre-activation sign source
};

/// He-style stddev where fan-in counts every tap of every input channel.
template <typename Scalar>
Scalar weight_init_stddev(Index c_in, Index taps) {
  return std::sqrt(Scalar(2) / static_cast<Scalar>(c_in * taps));
}

template <typename Scalar>
Layer<Scalar> make_conv_layer(LayerKind kind, Index c_in, Index c_out, std::pair<Index, Index> grid,
                              std::pair<int, int> stride, Scalar epsilon_init, Rng& rng) {
  if (kind == LayerKind::irregular_conv && grid.first == 1 && grid.second == 1)
    throw ArgumentError("1x1 kernels must be regular_conv");
  if (c_in < 1 || c_out < 1) throw ArgumentError("conv layer needs positive channel counts");

  Layer<Scalar> layer;
  layer.spec = {kind, c_in, c_out, grid, stride};
  layer.positions_trainable = kind == LayerKind::irregular_conv;

  const Scalar eps = kind == LayerKind::irregular_conv ? epsilon_init : Scalar(0);
  layer.kernel.positions = init_positions<Scalar>(grid.first, grid.second, eps, c_in);
  layer.kernel.stride = stride;
  const Index n = grid.first * grid.second;
  const Scalar stddev = weight_init_stddev<Scalar>(c_in, n);
  layer.kernel.weights.resize(c_out, c_in * n);
  for (Index r = 0; r < c_out; ++r)
    for (Index c = 0; c < c_in * n; ++c) layer.kernel.weights(r, c) = static_cast<Scalar>(rng.normal()) * stddev;
  return layer;
}

template <typename Scalar>
Layer<Scalar> make_relu_layer(Index channels) {
  Layer<Scalar> layer;
  layer.spec = {LayerKind::relu, channels, channels, {0, 0}, {1, 1}};
  return layer;
}

/// Ordered layer stack with forward caches. Forward and backward mutate the
/// caches, so one Network instance is single-threaded.
template <typename Scalar>
struct Network {
  std::vector<Layer<Scalar>> layers;
  bool has_forward{false};
};

template <typename Scalar>
Tensor<Scalar> network_forward(Network<Scalar>& net, const Tensor<Scalar>& input) {
  Tensor<Scalar> x = input;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer<Scalar>& layer = net.layers[li];
    try {
      switch (layer.spec.kind) {
        case LayerKind::irregular_conv:
        case LayerKind::regular_conv: {
          if (x.shape().channels != layer.kernel.in_channels())
            throw ShapeError("input channels " + std::to_string(x.shape().channels) + " != c_in " +
                             std::to_string(layer.kernel.in_channels()));
          layer.input_cache = x;
          layer.patches_cache = im2col_irregular(x, layer.kernel.positions, layer.kernel.stride);
          x = apply_weights(layer.patches_cache, layer.kernel);
          break;
        }
        case LayerKind::relu: {
          layer.input_cache = x;
          Tensor<Scalar> y(x.shape());
          y.flat() = x.flat().max(Scalar(0));
          x = std::move(y);
          break;
        }
      }
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(li) + " (" + layer_kind_name(layer.spec.kind) +
                       "): " + e.what());
    }
    layer.output_cache = x;
  }
  net.has_forward = true;
  return x;
}

template <typename Scalar>
struct LayerGradients {
  std::optional<RowMatrix<Scalar>> weights;
  std::optional<PositionGradient<Scalar>> positions;
};

template <typename Scalar>
struct NetworkGradients {
  std::vector<LayerGradients<Scalar>> layers;
  Tensor<Scalar> input;  // dLoss/dInput of the first layer
};

template <typename Scalar>
NetworkGradients<Scalar> network_backward(Network<Scalar>& net, const Tensor<Scalar>& grad_out) {
  if (!net.has_forward) throw StateError("network_backward called before network_forward");

  NetworkGradients<Scalar> grads;
  grads.layers.resize(net.layers.size());
  Tensor<Scalar> g = grad_out;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    Layer<Scalar>& layer = net.layers[li];
    switch (layer.spec.kind) {
      case LayerKind::irregular_conv:
      case LayerKind::regular_conv: {
        grads.layers[li].weights = backward_weights(g, layer.patches_cache);
        grads.layers[li].positions =
            backward_positions(g, layer.kernel, layer.input_cache, layer.patches_cache);
        g = backward_input(g, layer.kernel, layer.patches_cache);
        break;
      }
      case LayerKind::relu: {
        if (!(g.shape() == layer.input_cache.shape()))
          throw ShapeError("layer " + std::to_string(li) + " (relu): grad shape mismatch");
        Tensor<Scalar> gi(g.shape());
        gi.flat() = (layer.input_cache.flat() > Scalar(0)).template cast<Scalar>() * g.flat();
        g = std::move(gi);
        break;
      }
    }
  }
  grads.input = std::move(g);
  return grads;
}

/// Mean per-pixel softmax cross entropy over the channel axis, plus its
/// gradient (softmax - onehot) / (batch * pixels). Labels are integer class
/// ids stored in a rank-4 tensor of extents (batch, 1, height, width).
template <typename Scalar>
std::pair<Scalar, Tensor<Scalar>> pixel_softmax_xent(const Tensor<Scalar>& scores,
                                                     const Tensor<Scalar>& labels) {
  const Shape4 s = scores.shape();
  if (labels.shape().batch != s.batch || labels.shape().channels != 1 ||
      labels.shape().height != s.height || labels.shape().width != s.width)
    throw ShapeError("pixel_softmax_xent: label extents " + labels.shape().str() +
                     " do not match scores " + s.str());
  const Index classes = s.channels;
  const Scalar norm = static_cast<Scalar>(s.batch * s.height * s.width);

  Tensor<Scalar> grad(s);
  Scalar loss = 0;
  for (Index b = 0; b < s.batch; ++b)
    for (Index h = 0; h < s.height; ++h)
      for (Index w = 0; w < s.width; ++w) {
        const Scalar lab = labels(b, 0, h, w);
        const auto k = static_cast<Index>(lab);
        if (static_cast<Scalar>(k) != lab || k < 0 || k >= classes)
          throw ArgumentError("pixel_softmax_xent: label out of range at (" + std::to_string(b) + "," +
                              std::to_string(h) + "," + std::to_string(w) + ")");
        Scalar max_score = scores(b, 0, h, w);
        for (Index c = 1; c < classes; ++c) max_score = std::max(max_score, scores(b, c, h, w));
        Scalar denom = 0;
        for (Index c = 0; c < classes; ++c) denom += std::exp(scores(b, c, h, w) - max_score);
        loss += (std::log(denom) - (scores(b, k, h, w) - max_score)) / norm;
        for (Index c = 0; c < classes; ++c) {
          const Scalar p = std::exp(scores(b, c, h, w) - max_score) / denom;
          grad(b, c, h, w) = (p - (c == k ? Scalar(1) : Scalar(0))) / norm;
        }
      }
  return {loss, std::move(grad)};
}

}  // namespace icnn
