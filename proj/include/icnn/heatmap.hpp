// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "icnn/nn.hpp"

namespace icnn {

/// Receptive-field probe for one output pixel: forward the image, seed the
/// output gradient with 1.0 at (class_index, pixel_row, pixel_col) and zeros
/// everywhere else, backpropagate to the input, and return the absolute
/// input gradient summed over channels as a (1, 1, h, w) map.
Tensord compute_heatmap(Network<double>& net, const Tensord& image, Index pixel_row, Index pixel_col,
                        Index class_index);

/// Grid CSV: one line per image row, width comma-separated raw values.
void write_heatmap_csv(const std::filesystem::path& path, const Tensord& map);

/// Binary PGM (P5, maxval 255), normalized to the map's maximum; an all-zero
/// map stays all zeros.
void write_heatmap_pgm(const std::filesystem::path& path, const Tensord& map);

}  // namespace icnn
