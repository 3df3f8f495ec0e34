// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#include "icnn/train.hpp"

#include <cmath>

#include "icnn/errors.hpp"

namespace icnn {

namespace {

/// Copy `batch_size` images starting at dataset index `start` (wrapping).
Tensord gather_batch(const Tensord& all, Index start, Index batch_size) {
  const Shape4 s = all.shape();
  Tensord out({batch_size, s.channels, s.height, s.width});
  for (Index j = 0; j < batch_size; ++j) {
    const Index src = (start + j) % s.batch;
    const double* from = all.data() + all.offset(src, 0, 0, 0);
    double* to = out.data() + out.offset(j, 0, 0, 0);
    std::copy(from, from + s.channels * s.height * s.width, to);
  }
  return out;
}

/// Center-crop label maps to the score extents using the net's crop offset.
Tensord crop_labels(const Tensord& labels, std::pair<Index, Index> offset, Index out_h, Index out_w) {
  const Shape4 s = labels.shape();
  if (offset.first + out_h > s.height || offset.second + out_w > s.width)
    throw ShapeError("crop_labels: scores larger than label maps");
  Tensord out({s.batch, 1, out_h, out_w});
  for (Index b = 0; b < s.batch; ++b)
    for (Index h = 0; h < out_h; ++h)
      for (Index w = 0; w < out_w; ++w)
        out(b, 0, h, w) = labels(b, 0, h + offset.first, w + offset.second);
  return out;
}

bool clamp_ok(const PositionSet<double>& before, const PositionSet<double>& after, double eps) {
  auto inside = [&](const ArrayXX<double>& b, const ArrayXX<double>& a) {
    return ((a > b.floor() - eps) && (a < b.ceil() + eps)).all();
  };
  return inside(before.row_offsets, after.row_offsets) && inside(before.col_offsets, after.col_offsets);
}

}  // namespace

ToyArch parse_arch(const std::string& name) {
  if (name == "irregular") return ToyArch::irregular;
  if (name == "regular") return ToyArch::regular;
  throw ArgumentError("arch must be 'irregular' or 'regular', got '" + name + "'");
}

Network<double> build_toy_net(ToyArch arch, Index in_channels, Index classes, const TrainConfig& config) {
  const LayerKind conv_kind =
      arch == ToyArch::irregular ? LayerKind::irregular_conv : LayerKind::regular_conv;
  const double eps = config.epsilon_init;
  Rng rng(config.seed);
  Network<double> net;
  net.layers.push_back(make_conv_layer<double>(conv_kind, in_channels, 8, {3, 3}, {1, 1}, eps, rng));
  net.layers.push_back(make_relu_layer<double>(8));
  net.layers.push_back(make_conv_layer<double>(conv_kind, 8, 8, {3, 3}, {1, 1}, eps, rng));
  net.layers.push_back(make_relu_layer<double>(8));
  net.layers.push_back(
      make_conv_layer<double>(LayerKind::regular_conv, 8, classes, {1, 1}, {1, 1}, 0.0, rng));
  return net;
}

std::pair<Index, Index> label_crop_offset(const Network<double>& net) {
  Index dr = 0, dc = 0;
  for (const auto& layer : net.layers) {
    if (layer.spec.kind == LayerKind::relu) continue;
    if (layer.spec.stride != std::pair<int, int>{1, 1})
      throw ArgumentError("label_crop_offset: only stride-1 nets supported");
    dr += layer.kernel.positions.center_row();
    dc += layer.kernel.positions.center_col();
  }
  return {dr, dc};
}

TrainResult train_network(Network<double>& net, const Dataset& data, const TrainConfig& config,
                          std::int64_t snapshot_every) {
  validate_train_config(config);
  if (snapshot_every < 0) throw ArgumentError("train_network: snapshot_every must be >= 0");
  if (data.images.shape().batch < 1) throw ArgumentError("train_network: empty dataset");

  const auto offset = label_crop_offset(net);
  TrainResult result;
  if (snapshot_every > 0) {
    auto init = record_snapshot(net, 0, snapshot_every);
    result.snapshots.insert(result.snapshots.end(), init.begin(), init.end());
  }

  for (std::int64_t iter = 1; iter <= config.max_iter; ++iter) {
    const Tensord images = gather_batch(data.images, (iter - 1) * config.batch_size, config.batch_size);
    const Tensord labels = gather_batch(data.labels, (iter - 1) * config.batch_size, config.batch_size);

    const Tensord scores = network_forward(net, images);
    const Tensord cropped =
        crop_labels(labels, offset, scores.shape().height, scores.shape().width);
    auto [loss, grad] = pixel_softmax_xent(scores, cropped);
    const NetworkGradients<double> grads = network_backward(net, grad);

    const double lr_w = poly_lr(config.lr_weights, iter - 1, config);
    const double lr_p = poly_lr(config.lr_positions, iter - 1, config);

    std::vector<PositionSet<double>> before;
    for (const auto& layer : net.layers)
      if (layer.positions_trainable) before.push_back(layer.kernel.positions);

    sgd_step(net, grads, lr_w, lr_p, config.epsilon_clamp);

    std::size_t bi = 0;
    for (const auto& layer : net.layers)
      if (layer.positions_trainable)
        if (!clamp_ok(before[bi++], layer.kernel.positions, config.epsilon_clamp))
          ++result.clamp_violations;

    result.log.push_back({iter, loss, lr_w, lr_p});
    if (snapshot_every > 0) {
      auto snaps = record_snapshot(net, iter, snapshot_every);
      result.snapshots.insert(result.snapshots.end(), snaps.begin(), snaps.end());
    }
  }

  result.final_pixel_accuracy = pixel_accuracy(net, data, config.batch_size);
  return result;
}

double pixel_accuracy(Network<double>& net, const Dataset& data, std::int64_t batch_size) {
  const auto offset = label_crop_offset(net);
  const Index n = data.images.shape().batch;
  Index hits = 0, total = 0;
  for (Index start = 0; start < n; start += batch_size) {
    const Index b = std::min<Index>(batch_size, n - start);
    const Tensord images = gather_batch(data.images, start, b);
    const Tensord labels = gather_batch(data.labels, start, b);
    const Tensord scores = network_forward(net, images);
    const Tensord cropped = crop_labels(labels, offset, scores.shape().height, scores.shape().width);
    for (Index bb = 0; bb < b; ++bb)
      for (Index h = 0; h < scores.shape().height; ++h)
        for (Index w = 0; w < scores.shape().width; ++w) {
          Index best = 0;
          for (Index c = 1; c < scores.shape().channels; ++c)
            if (scores(bb, c, h, w) > scores(bb, best, h, w)) best = c;
          hits += best == static_cast<Index>(cropped(bb, 0, h, w));
          ++total;
        }
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

Index class_count(const Tensord& labels) {
  double max_label = 0;
  for (Index i = 0; i < labels.size(); ++i) max_label = std::max(max_label, labels.data()[i]);
  return static_cast<Index>(max_label) + 1;
}

}  // namespace icnn
