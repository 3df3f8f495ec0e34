// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#include "icnn/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "icnn/errors.hpp"

namespace icnn {

namespace {

Index round_to_index(double x) { return static_cast<Index>(std::llround(x)); }

}  // namespace

Dataset generate_strokes(const StrokeParams& p) {
  if (p.count < 1 || p.size < 1 || p.strokes < 0 || p.length < 1 || p.thickness < 1)
    throw ArgumentError("generate_strokes: invalid parameters");

  const double rad = p.angle_deg * std::numbers::pi / 180.0;
  const double dir_r = std::sin(rad);
  const double dir_c = std::cos(rad);
  const double perp_r = std::cos(rad);
  const double perp_c = -std::sin(rad);

  // Bounding offsets of the whole rasterized stroke relative to its start.
  double lo_r = 0, hi_r = 0, lo_c = 0, hi_c = 0;
  for (const double t : {0.0, static_cast<double>(p.length - 1)})
    for (const double k : {0.0, static_cast<double>(p.thickness - 1)}) {
      lo_r = std::min(lo_r, t * dir_r + k * perp_r);
      hi_r = std::max(hi_r, t * dir_r + k * perp_r);
      lo_c = std::min(lo_c, t * dir_c + k * perp_c);
      hi_c = std::max(hi_c, t * dir_c + k * perp_c);
    }
  const Index r_min = round_to_index(std::ceil(-lo_r));
  const Index r_max = p.size - 1 - round_to_index(std::ceil(hi_r));
  const Index c_min = round_to_index(std::ceil(-lo_c));
  const Index c_max = p.size - 1 - round_to_index(std::ceil(hi_c));
  if (r_min > r_max || c_min > c_max)
    throw ArgumentError("generate_strokes: stroke does not fit inside the image");

  Rng rng(p.seed);
  Dataset data;
  data.images = Tensord({p.count, 1, p.size, p.size});
  data.labels = Tensord({p.count, 1, p.size, p.size});

  for (Index b = 0; b < p.count; ++b) {
    for (Index s = 0; s < p.strokes; ++s) {
      const Index r0 = rng.uniform_int(r_min, r_max);
      const Index c0 = rng.uniform_int(c_min, c_max);
      for (Index t = 0; t < p.length; ++t)
        for (Index k = 0; k < p.thickness; ++k) {
          const Index r = r0 + round_to_index(t * dir_r + k * perp_r);
          const Index c = c0 + round_to_index(t * dir_c + k * perp_c);
          if (r < 0 || r >= p.size || c < 0 || c >= p.size) continue;
          data.images(b, 0, r, c) = 1.0;
          data.labels(b, 0, r, c) = 1.0;
        }
    }
    if (p.noise_stddev > 0)
      for (Index h = 0; h < p.size; ++h)
        for (Index w = 0; w < p.size; ++w)
          data.images(b, 0, h, w) += p.noise_stddev * rng.normal();
  }
  return data;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data, const StrokeParams& p) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  auto write = [&](const char* name, const Tensord& t) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw IoError("save_dataset: cannot open " + (dir / name).string());
    write_tensor(os, t);
  };
  write("images.ict", data.images);
  write("labels.ict", data.labels);

  std::ofstream mf(dir / "manifest.txt");
  if (!mf) throw IoError("save_dataset: cannot open manifest");
  char buf[64];
  mf << "count=" << p.count << "\n";
  mf << "size=" << p.size << "\n";
  mf << "strokes=" << p.strokes << "\n";
  mf << "length=" << p.length << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", p.angle_deg);
  mf << "angle_deg=" << buf << "\n";
  mf << "thickness=" << p.thickness << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", p.noise_stddev);
  mf << "noise_stddev=" << buf << "\n";
  mf << "seed=" << p.seed << "\n";
  if (!mf) throw IoError("save_dataset: manifest write failure");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    std::ifstream is(dir / name, std::ios::binary);
    if (!is) throw IoError("load_dataset: cannot open " + (dir / name).string());
    return read_tensor(is);
  };
  Dataset data;
  data.images = read("images.ict");
  data.labels = read("labels.ict");
  if (!(data.images.shape() == data.labels.shape()))
    throw FormatError("load_dataset: image/label shape mismatch");
  return data;
}

}  // namespace icnn
