// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#include "icnn/heatmap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "icnn/errors.hpp"

namespace icnn {

Tensord compute_heatmap(Network<double>& net, const Tensord& image, Index pixel_row, Index pixel_col,
                        Index class_index) {
  if (image.shape().batch < 1) throw ArgumentError("compute_heatmap: empty image batch");

  // Only the first batch item is probed.
  Tensord single({1, image.shape().channels, image.shape().height, image.shape().width});
  std::copy(image.data(), image.data() + single.size(), single.data());

  const Tensord scores = network_forward(net, single);
  if (class_index < 0 || class_index >= scores.shape().channels)
    throw ArgumentError("compute_heatmap: class index out of range");
  if (pixel_row < 0 || pixel_row >= scores.shape().height || pixel_col < 0 ||
      pixel_col >= scores.shape().width)
    throw ArgumentError("compute_heatmap: pixel outside output extents " + scores.shape().str());

  Tensord grad_out(scores.shape());
  grad_out(0, class_index, pixel_row, pixel_col) = 1.0;
  const NetworkGradients<double> grads = network_backward(net, grad_out);

  Tensord map({1, 1, single.shape().height, single.shape().width});
  for (Index c = 0; c < single.shape().channels; ++c)
    for (Index h = 0; h < single.shape().height; ++h)
      for (Index w = 0; w < single.shape().width; ++w)
        map(0, 0, h, w) += std::abs(grads.input(0, c, h, w));
  return map;
}

void write_heatmap_csv(const std::filesystem::path& path, const Tensord& map) {
  std::ofstream os(path);
  if (!os) throw IoError("write_heatmap_csv: cannot open " + path.string());
  char buf[64];
  for (Index h = 0; h < map.shape().height; ++h) {
    for (Index w = 0; w < map.shape().width; ++w) {
      std::snprintf(buf, sizeof buf, "%.17g", map(0, 0, h, w));
      os << (w ? "," : "") << buf;
    }
    os << "\n";
  }
  if (!os) throw IoError("write_heatmap_csv: write failure");
}

void write_heatmap_pgm(const std::filesystem::path& path, const Tensord& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_heatmap_pgm: cannot open " + path.string());
  const Index h = map.shape().height;
  const Index w = map.shape().width;
  double max_value = 0;
  for (Index i = 0; i < map.size(); ++i) max_value = std::max(max_value, map.data()[i]);
  os << "P5\n" << w << " " << h << "\n255\n";
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const double v = max_value > 0 ? map(0, 0, r, c) / max_value : 0.0;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  if (!os) throw IoError("write_heatmap_pgm: write failure");
}

}  // namespace icnn
