// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "icnn/tensor.hpp"

namespace icnn {

/// Parameters of the synthetic stroke dataset. Images contain `strokes`
/// bright line segments of fixed length and orientation on a dark background,
/// optionally with Gaussian pixel noise; labels mark the stroke pixels.
struct StrokeParams {
  std::int64_t count{16};     // images in the set
  std::int64_t size{32};      // square spatial extent
  std::int64_t strokes{3};    // strokes per image
  std::int64_t length{9};     // stroke length in pixels
  double angle_deg{0.0};      // orientation; 0 = horizontal (along columns)
  std::int64_t thickness{1};  // pixels across the stroke
  double noise_stddev{0.0};
  std::uint64_t seed{1};
};

struct Dataset {
  Tensord images;  // (count, 1, size, size)
  Tensord labels;  // (count, 1, size, size), values 0 or 1
};

/// Deterministic generation: per image, draw `strokes` start points, then
/// (if noise_stddev > 0) one normal deviate per pixel. Labeled foreground
/// pixels are exactly the rasterized stroke pixels; labels carry no noise.
Dataset generate_strokes(const StrokeParams& params);

/// Writes images.ict, labels.ict and manifest.txt (key=value echo of the
/// generator parameters) into `dir`, creating it if needed.
void save_dataset(const std::filesystem::path& dir, const Dataset& data, const StrokeParams& params);

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace icnn
