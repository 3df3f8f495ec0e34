// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "icnn/nn.hpp"
#include "icnn/optim.hpp"

namespace icnn {

/// Model file ("ICM1"): magic, u64 version, u64 layer count, then per layer
/// seven u64 header words (kind, c_in, c_out, grid rows/cols, stride
/// row/col). Conv layers append their weights as a (1, c_out, c_in, n)
/// tensor and their positions as a (1, 2, c_in, n) tensor (channel 0 = row
/// offsets, channel 1 = column offsets), both in the "ICT1" tensor format.
/// Round-trips are bit-exact.
void save_model(const std::filesystem::path& path, const Network<double>& net);
Network<double> load_model(const std::filesystem::path& path);

/// Flat JSON list of position snapshots, one record per (layer, iteration).
void write_snapshots_json(const std::filesystem::path& path,
                          const std::vector<ShapeSnapshot<double>>& snapshots);
std::vector<ShapeSnapshot<double>> read_snapshots_json(const std::filesystem::path& path);

/// Trajectory-grouped JSON: per layer, per input channel, per tap, the
/// (iteration, p_x, p_y) sequence. p_x is the row offset, p_y the column
/// offset. Input may be a model file (one iteration-0 entry per layer) or a
/// snapshots JSON produced by training.
void dump_shapes(const std::filesystem::path& in_path, const std::filesystem::path& out_path);

}  // namespace icnn
