// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "icnn/errors.hpp"
#include "icnn/irrconv.hpp"
#include "icnn/nn.hpp"

namespace icnn {

/// Training hyperparameters. Weights and positions get separate base rates;
/// both decay with the poly schedule.
struct TrainConfig {
  double lr_weights{0.001};
  double lr_positions{50.0};
  double poly_power{0.9};
  std::int64_t max_iter{500};
  std::int64_t batch_size{4};
  double epsilon_init{0.05};
  double epsilon_clamp{0.25};
  std::uint64_t seed{1};
};

inline void validate_train_config(const TrainConfig& c) {
  if (c.lr_weights < 0 || c.lr_positions < 0) throw ConfigError("learning rates must be >= 0");
  if (!(c.poly_power > 0)) throw ConfigError("poly_power must be > 0");
  if (c.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(std::abs(c.epsilon_init) < 0.5)) throw ConfigError("|epsilon_init| must be < 0.5");
  if (!(c.epsilon_clamp > 0)) throw ConfigError("epsilon_clamp must be > 0");
}

/// Flat key=value text, one pair per line; '#' starts a comment. Every key
/// is optional and defaults to the values above; unknown keys are an error.
inline TrainConfig parse_train_config(std::istream& is) {
  TrainConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::size_t used = 0;
    try {
      if (key == "lr_weights") c.lr_weights = std::stod(value, &used);
      else if (key == "lr_positions") c.lr_positions = std::stod(value, &used);
      else if (key == "poly_power") c.poly_power = std::stod(value, &used);
      else if (key == "max_iter") c.max_iter = std::stoll(value, &used);
      else if (key == "batch_size") c.batch_size = std::stoll(value, &used);
      else if (key == "epsilon_init") c.epsilon_init = std::stod(value, &used);
      else if (key == "epsilon_clamp") c.epsilon_clamp = std::stod(value, &used);
      else if (key == "seed") c.seed = std::stoull(value, &used);
      else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError("config line " + std::to_string(lineno) + ": bad value '" + value + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError("config line " + std::to_string(lineno) + ": value out of range");
    }
    if (used != value.size())
      throw ConfigError("config line " + std::to_string(lineno) + ": trailing junk in '" + value + "'");
  }
  validate_train_config(c);
  return c;
}

/// base * (1 - iter/max_iter)^poly_power.
inline double poly_lr(double base, std::int64_t iter, const TrainConfig& config) {
  if (iter < 0 || iter > config.max_iter)
    throw ArgumentError("poly_lr: iter must be in [0, max_iter]");
  const double frac = 1.0 - static_cast<double>(iter) / static_cast<double>(config.max_iter);
  return base * std::pow(frac, config.poly_power);
}

/// Confine each updated coordinate near the unit cell of its previous value:
/// the open interval (floor(last)-eps, ceil(last)+eps), realized as a clip to
/// [floor(last)-eps+delta, ceil(last)+eps-delta] with delta = 1e-9 so the
/// strict inequalities hold after the clip.
template <typename Scalar>
PositionSet<Scalar> clamp_positions(const PositionSet<Scalar>& p_last,
                                    const PositionSet<Scalar>& p_candidate, Scalar epsilon_clamp) {
  if (p_last.row_offsets.rows() != p_candidate.row_offsets.rows() ||
      p_last.row_offsets.cols() != p_candidate.row_offsets.cols())
    throw ShapeError("clamp_positions: shape mismatch");
  constexpr Scalar delta = Scalar(1e-9);
  PositionSet<Scalar> out = p_candidate;
  out.grid_rows = p_last.grid_rows;
  out.grid_cols = p_last.grid_cols;
  out.row_offsets = p_candidate.row_offsets.max(p_last.row_offsets.floor() - epsilon_clamp + delta)
                        .min(p_last.row_offsets.ceil() + epsilon_clamp - delta);
  out.col_offsets = p_candidate.col_offsets.max(p_last.col_offsets.floor() - epsilon_clamp + delta)
                        .min(p_last.col_offsets.ceil() + epsilon_clamp - delta);
  return out;
}

/// One SGD step on a single kernel. Positions move only when a position
/// gradient is supplied, and the candidate is clamped against the pre-step
/// positions before being stored.
template <typename Scalar>
void sgd_step(IrregularKernel<Scalar>& kernel, const RowMatrix<Scalar>& grad_weights,
              const PositionGradient<Scalar>* grad_positions, Scalar lr_w, Scalar lr_p,
              Scalar epsilon_clamp) {
  if (grad_weights.rows() != kernel.weights.rows() || grad_weights.cols() != kernel.weights.cols())
    throw ShapeError("sgd_step: weight gradient shape mismatch");
  kernel.weights -= lr_w * grad_weights;
  if (grad_positions) {
    if (grad_positions->row.rows() != kernel.positions.row_offsets.rows() ||
        grad_positions->row.cols() != kernel.positions.row_offsets.cols())
      throw ShapeError("sgd_step: position gradient shape mismatch");
    PositionSet<Scalar> candidate = kernel.positions;
    candidate.row_offsets -= lr_p * grad_positions->row;
    candidate.col_offsets -= lr_p * grad_positions->col;
    kernel.positions = clamp_positions(kernel.positions, candidate, epsilon_clamp);
  }
}

/// One SGD step over a whole network. Regular convs keep their integer grid:
/// only layers with trainable positions see the position rate.
template <typename Scalar>
void sgd_step(Network<Scalar>& net, const NetworkGradients<Scalar>& grads, Scalar lr_w, Scalar lr_p,
              Scalar epsilon_clamp) {
  if (grads.layers.size() != net.layers.size()) throw ShapeError("sgd_step: gradient set size mismatch");
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer<Scalar>& layer = net.layers[li];
    if (layer.spec.kind == LayerKind::relu) continue;
    const auto& lg = grads.layers[li];
    if (!lg.weights) throw ShapeError("sgd_step: missing weight gradient for layer " + std::to_string(li));
    const PositionGradient<Scalar>* pg =
        layer.positions_trainable && lg.positions ? &*lg.positions : nullptr;
    sgd_step(layer.kernel, *lg.weights, pg, lr_w, lr_p, epsilon_clamp);
  }
}

/// Immutable copy of one layer's positions at one iteration.
template <typename Scalar>
struct ShapeSnapshot {
  std::size_t layer_index{0};
  std::int64_t iteration{0};
  LayerKind kind{LayerKind::regular_conv};
  PositionSet<Scalar> positions;
};

/// Snapshot every spatial conv layer (nominal grid larger than 1x1) when the
/// iteration hits the cadence. 1x1 dimension transforms are skipped.
template <typename Scalar>
std::vector<ShapeSnapshot<Scalar>> record_snapshot(const Network<Scalar>& net, std::int64_t iter,
                                                   std::int64_t every_k) {
  if (every_k < 1) throw ArgumentError("record_snapshot: every_k must be >= 1");
  std::vector<ShapeSnapshot<Scalar>> out;
  if (iter % every_k != 0) return out;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer<Scalar>& layer = net.layers[li];
    if (layer.spec.kind == LayerKind::relu) continue;
    if (layer.spec.grid.first <= 1 && layer.spec.grid.second <= 1) continue;
    out.push_back({li, iter, layer.spec.kind, layer.kernel.positions});
  }
  return out;
}

}  // namespace icnn
