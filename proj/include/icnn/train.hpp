// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icnn/dataset.hpp"
#include "icnn/nn.hpp"
#include "icnn/optim.hpp"

namespace icnn {

enum class ToyArch { irregular, regular };

ToyArch parse_arch(const std::string& name);

/// The fixed toy architecture: conv(in->8, 3x3) -> relu -> conv(8->8, 3x3)
/// -> relu -> regular 1x1 (8->classes). The irregular variant makes the two
/// 3x3 layers irregular; the regular variant keeps them on the integer grid.
/// Both variants have identical parameter counts and draw identical initial
/// weights for the same seed.
Network<double> build_toy_net(ToyArch arch, Index in_channels, Index classes, const TrainConfig& config);

/// Accumulated kernel-center offset of all conv layers, i.e. the (row, col)
/// shift between an output pixel and the input pixel it is centered on.
/// Used to crop label maps to valid-convolution outputs. Stride must be 1.
std::pair<Index, Index> label_crop_offset(const Network<double>& net);

struct TrainRecord {
  std::int64_t iter{0};
  double loss{0};
  double lr_w{0};
  double lr_p{0};
};

struct TrainResult {
  std::vector<TrainRecord> log;
  std::vector<ShapeSnapshot<double>> snapshots;
  double final_pixel_accuracy{0};
  std::int64_t clamp_violations{0};
};

/// Plain SGD over deterministic cycling minibatches with the poly schedule
/// on both learning rates and position clamping after every step. Records a
/// snapshot of all spatial conv layers at iteration 0 and then at every
/// `snapshot_every`-th step (0 disables snapshots). Every position update
/// is checked against the clamp contract; violations are counted, never
/// silently accepted.
TrainResult train_network(Network<double>& net, const Dataset& data, const TrainConfig& config,
                          std::int64_t snapshot_every);

/// Fraction of (cropped) label pixels whose argmax class matches.
double pixel_accuracy(Network<double>& net, const Dataset& data, std::int64_t batch_size);

/// Number of distinct label values, i.e. max label + 1.
Index class_count(const Tensord& labels);

}  // namespace icnn
