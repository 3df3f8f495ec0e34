// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#include "icnn/model_io.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <map>

#include "icnn/errors.hpp"

namespace icnn {

namespace {

constexpr std::uint64_t kModelVersion = 1;

std::uint64_t kind_code(LayerKind k) {
  switch (k) {
    case LayerKind::irregular_conv: return 0;
    case LayerKind::regular_conv: return 1;
    case LayerKind::relu: return 2;
  }
  throw FormatError("unknown layer kind");
}

LayerKind kind_from_code(std::uint64_t code) {
  switch (code) {
    case 0: return LayerKind::irregular_conv;
    case 1: return LayerKind::regular_conv;
    case 2: return LayerKind::relu;
  }
  throw FormatError("model file: bad layer kind " + std::to_string(code));
}

Tensord positions_to_tensor(const PositionSet<double>& p) {
  Tensord t({1, 2, p.channels(), p.taps()});
  for (Index c = 0; c < p.channels(); ++c)
    for (Index i = 0; i < p.taps(); ++i) {
      t(0, 0, c, i) = p.row_offsets(c, i);
      t(0, 1, c, i) = p.col_offsets(c, i);
    }
  return t;
}

PositionSet<double> positions_from_tensor(const Tensord& t, Index grid_rows, Index grid_cols) {
  if (t.shape().batch != 1 || t.shape().channels != 2)
    throw FormatError("model file: bad position tensor shape " + t.shape().str());
  PositionSet<double> p;
  p.grid_rows = grid_rows;
  p.grid_cols = grid_cols;
  p.row_offsets.resize(t.shape().height, t.shape().width);
  p.col_offsets.resize(t.shape().height, t.shape().width);
  for (Index c = 0; c < t.shape().height; ++c)
    for (Index i = 0; i < t.shape().width; ++i) {
      p.row_offsets(c, i) = t(0, 0, c, i);
      p.col_offsets(c, i) = t(0, 1, c, i);
    }
  return p;
}

nlohmann::json snapshot_to_json(const ShapeSnapshot<double>& s) {
  nlohmann::json channels = nlohmann::json::array();
  const PositionSet<double>& p = s.positions;
  for (Index c = 0; c < p.channels(); ++c) {
    nlohmann::json taps = nlohmann::json::array();
    for (Index i = 0; i < p.taps(); ++i)
      taps.push_back({{"tap", i}, {"p_x", p.row_offsets(c, i)}, {"p_y", p.col_offsets(c, i)}});
    channels.push_back({{"channel", c}, {"taps", std::move(taps)}});
  }
  return {{"layer", s.layer_index},
          {"iteration", s.iteration},
          {"kind", layer_kind_name(s.kind)},
          {"grid", {p.grid_rows, p.grid_cols}},
          {"positions", std::move(channels)}};
}

ShapeSnapshot<double> snapshot_from_json(const nlohmann::json& j) {
  ShapeSnapshot<double> s;
  s.layer_index = j.at("layer").get<std::size_t>();
  s.iteration = j.at("iteration").get<std::int64_t>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "irregular_conv") s.kind = LayerKind::irregular_conv;
  else if (kind == "regular_conv") s.kind = LayerKind::regular_conv;
  else throw FormatError("snapshot json: bad kind '" + kind + "'");

  s.positions.grid_rows = j.at("grid").at(0).get<Index>();
  s.positions.grid_cols = j.at("grid").at(1).get<Index>();
  const auto& channels = j.at("positions");
  const auto c_in = static_cast<Index>(channels.size());
  Index n = 0;
  for (const auto& ch : channels) n = std::max<Index>(n, static_cast<Index>(ch.at("taps").size()));
  s.positions.row_offsets.resize(c_in, n);
  s.positions.col_offsets.resize(c_in, n);
  for (const auto& ch : channels) {
    const auto c = ch.at("channel").get<Index>();
    if (c < 0 || c >= c_in) throw FormatError("snapshot json: channel index out of range");
    for (const auto& tap : ch.at("taps")) {
      const auto i = tap.at("tap").get<Index>();
      if (i < 0 || i >= n) throw FormatError("snapshot json: tap index out of range");
      s.positions.row_offsets(c, i) = tap.at("p_x").get<double>();
      s.positions.col_offsets(c, i) = tap.at("p_y").get<double>();
    }
  }
  return s;
}

}  // namespace

void save_model(const std::filesystem::path& path, const Network<double>& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_model: cannot open " + path.string());
  os.write("ICM1", 4);
  detail::put_u64_le(os, kModelVersion);
  detail::put_u64_le(os, net.layers.size());
  for (const auto& layer : net.layers) {
    detail::put_u64_le(os, kind_code(layer.spec.kind));
    detail::put_u64_le(os, static_cast<std::uint64_t>(layer.spec.c_in));
    detail::put_u64_le(os, static_cast<std::uint64_t>(layer.spec.c_out));
    detail::put_u64_le(os, static_cast<std::uint64_t>(layer.spec.grid.first));
    detail::put_u64_le(os, static_cast<std::uint64_t>(layer.spec.grid.second));
    detail::put_u64_le(os, static_cast<std::uint64_t>(layer.spec.stride.first));
    detail::put_u64_le(os, static_cast<std::uint64_t>(layer.spec.stride.second));
    if (layer.spec.kind == LayerKind::relu) continue;

    const Index n = layer.kernel.positions.taps();
    Tensord w({1, layer.kernel.out_channels(), layer.kernel.in_channels(), n});
    for (Index co = 0; co < layer.kernel.out_channels(); ++co)
      for (Index ci = 0; ci < layer.kernel.in_channels(); ++ci)
        for (Index i = 0; i < n; ++i) w(0, co, ci, i) = layer.kernel.weights(co, ci * n + i);
    write_tensor(os, w);
    write_tensor(os, positions_to_tensor(layer.kernel.positions));
  }
  if (!os) throw IoError("save_model: write failure");
}

Network<double> load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_model: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "ICM1", 4) != 0) throw FormatError("load_model: bad magic");
  if (detail::get_u64_le(is) != kModelVersion) throw FormatError("load_model: unsupported version");

  Network<double> net;
  const std::uint64_t layer_count = detail::get_u64_le(is);
  net.layers.resize(layer_count);
  for (auto& layer : net.layers) {
    layer.spec.kind = kind_from_code(detail::get_u64_le(is));
    layer.spec.c_in = static_cast<Index>(detail::get_u64_le(is));
    layer.spec.c_out = static_cast<Index>(detail::get_u64_le(is));
    layer.spec.grid.first = static_cast<Index>(detail::get_u64_le(is));
    layer.spec.grid.second = static_cast<Index>(detail::get_u64_le(is));
    layer.spec.stride.first = static_cast<int>(detail::get_u64_le(is));
    layer.spec.stride.second = static_cast<int>(detail::get_u64_le(is));
    layer.positions_trainable = layer.spec.kind == LayerKind::irregular_conv;
    if (layer.spec.kind == LayerKind::relu) continue;

    const Tensord w = read_tensor(is);
    if (w.shape().batch != 1 || w.shape().channels != layer.spec.c_out ||
        w.shape().height != layer.spec.c_in)
      throw FormatError("load_model: weight tensor shape " + w.shape().str() +
                        " does not match layer header");
    const Index n = w.shape().width;
    layer.kernel.weights.resize(layer.spec.c_out, layer.spec.c_in * n);
    for (Index co = 0; co < layer.spec.c_out; ++co)
      for (Index ci = 0; ci < layer.spec.c_in; ++ci)
        for (Index i = 0; i < n; ++i) layer.kernel.weights(co, ci * n + i) = w(0, co, ci, i);
    layer.kernel.positions =
        positions_from_tensor(read_tensor(is), layer.spec.grid.first, layer.spec.grid.second);
    if (layer.kernel.positions.channels() != layer.spec.c_in ||
        layer.kernel.positions.taps() != n)
      throw FormatError("load_model: position tensor does not match layer header");
    layer.kernel.stride = layer.spec.stride;
  }
  return net;
}

void write_snapshots_json(const std::filesystem::path& path,
                          const std::vector<ShapeSnapshot<double>>& snapshots) {
  nlohmann::json j;
  j["snapshots"] = nlohmann::json::array();
  for (const auto& s : snapshots) j["snapshots"].push_back(snapshot_to_json(s));
  std::ofstream os(path);
  if (!os) throw IoError("write_snapshots_json: cannot open " + path.string());
  os << j.dump(2) << "\n";
  if (!os) throw IoError("write_snapshots_json: write failure");
}

std::vector<ShapeSnapshot<double>> read_snapshots_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_snapshots_json: cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("read_snapshots_json: ") + e.what());
  }
  std::vector<ShapeSnapshot<double>> out;
  try {
    for (const auto& s : j.at("snapshots")) out.push_back(snapshot_from_json(s));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("read_snapshots_json: ") + e.what());
  }
  return out;
}

void dump_shapes(const std::filesystem::path& in_path, const std::filesystem::path& out_path) {
  std::vector<ShapeSnapshot<double>> snapshots;
  {
    std::ifstream probe(in_path, std::ios::binary);
    if (!probe) throw IoError("dump_shapes: cannot open " + in_path.string());
    char magic[4] = {};
    probe.read(magic, 4);
    if (probe && std::memcmp(magic, "ICM1", 4) == 0) {
      const Network<double> net = load_model(in_path);
      snapshots = record_snapshot(net, 0, 1);
    } else {
      snapshots = read_snapshots_json(in_path);
    }
  }

  // Group by layer, preserving per-layer metadata; trajectories are ordered
  // by iteration as recorded.
  std::map<std::size_t, std::vector<const ShapeSnapshot<double>*>> by_layer;
  for (const auto& s : snapshots) by_layer[s.layer_index].push_back(&s);

  nlohmann::json layers = nlohmann::json::array();
  for (const auto& [layer_index, snaps] : by_layer) {
    const PositionSet<double>& first = snaps.front()->positions;
    nlohmann::json channels = nlohmann::json::array();
    for (Index c = 0; c < first.channels(); ++c) {
      nlohmann::json taps = nlohmann::json::array();
      for (Index i = 0; i < first.taps(); ++i) {
        nlohmann::json traj = nlohmann::json::array();
        for (const auto* s : snaps)
          traj.push_back({{"iteration", s->iteration},
                          {"p_x", s->positions.row_offsets(c, i)},
                          {"p_y", s->positions.col_offsets(c, i)}});
        taps.push_back({{"tap", i}, {"trajectory", std::move(traj)}});
      }
      channels.push_back({{"channel", c}, {"taps", std::move(taps)}});
    }
    layers.push_back({{"layer", layer_index},
                      {"kind", layer_kind_name(snaps.front()->kind)},
                      {"grid", {first.grid_rows, first.grid_cols}},
                      {"channels", std::move(channels)}});
  }

  nlohmann::json out;
  out["layers"] = std::move(layers);
  std::ofstream os(out_path);
  if (!os) throw IoError("dump_shapes: cannot open " + out_path.string());
  os << out.dump(2) << "\n";
  if (!os) throw IoError("dump_shapes: write failure");
}

}  // namespace icnn
