// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: synthetic data generation, toy training, gradient
// checking, kernel-shape dumping and single-pixel heatmaps.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "icnn/dataset.hpp"
#include "icnn/errors.hpp"
#include "icnn/gradcheck.hpp"
#include "icnn/heatmap.hpp"
#include "icnn/model_io.hpp"
#include "icnn/train.hpp"

namespace {

int cmd_gradcheck(std::uint64_t seed, std::int64_t trials) {
  const icnn::GradCheckReport report = icnn::run_gradcheck(seed, trials);
  icnn::print_gradcheck_report(std::cout, report);
  return report.all_ok() ? 0 : 1;
}

int cmd_synth(const icnn::StrokeParams& params, const std::string& out_dir) {
  const icnn::Dataset data = icnn::generate_strokes(params);
  icnn::save_dataset(out_dir, data, params);
  std::cout << "wrote " << params.count << " images of size " << params.size << "x" << params.size
            << " to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir, const std::string& arch,
              const std::string& out_model, std::int64_t snapshot_every) {
  icnn::TrainConfig config;
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw icnn::IoError("cannot open config " + config_path);
    config = icnn::parse_train_config(is);
  }
  const icnn::Dataset data = icnn::load_dataset(data_dir);
  icnn::Network<double> net = icnn::build_toy_net(icnn::parse_arch(arch), data.images.shape().channels,
                                                  icnn::class_count(data.labels), config);

  const icnn::TrainResult result = icnn::train_network(net, data, config, snapshot_every);

  std::cout << "iter,loss,lr_w,lr_p\n";
  char buf[128];
  for (const auto& rec : result.log) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g", static_cast<long long>(rec.iter),
                  rec.loss, rec.lr_w, rec.lr_p);
    std::cout << buf << "\n";
  }
  std::cerr << "final_pixel_accuracy=" << result.final_pixel_accuracy << "\n";
  if (result.clamp_violations > 0) {
    std::cerr << "clamp violations: " << result.clamp_violations << "\n";
    return 1;
  }

  icnn::save_model(out_model, net);
  if (snapshot_every > 0)
    icnn::write_snapshots_json(out_model + ".snapshots.json", result.snapshots);
  return 0;
}

int cmd_dump_shapes(const std::string& in_path, const std::string& out_path) {
  icnn::dump_shapes(in_path, out_path);
  return 0;
}

int cmd_heatmap(const std::string& model_path, const std::string& image_path, const std::string& pixel,
                icnn::Index class_index, const std::string& out_prefix) {
  const auto comma = pixel.find(',');
  if (comma == std::string::npos) throw icnn::ArgumentError("--pixel expects R,C");
  const icnn::Index row = std::stoll(pixel.substr(0, comma));
  const icnn::Index col = std::stoll(pixel.substr(comma + 1));

  icnn::Network<double> net = icnn::load_model(model_path);
  std::ifstream is(image_path, std::ios::binary);
  if (!is) throw icnn::IoError("cannot open image " + image_path);
  const icnn::Tensord image = icnn::read_tensor(is);

  const icnn::Tensord map = icnn::compute_heatmap(net, image, row, col, class_index);
  icnn::write_heatmap_csv(out_prefix + ".csv", map);
  icnn::write_heatmap_pgm(out_prefix + ".pgm", map);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolution with learnable kernel shapes: toy training and diagnostics"};
  app.require_subcommand(1);

  // gradcheck
  std::uint64_t gc_seed = 1;
  std::int64_t gc_trials = 50;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients to finite differences");
  gradcheck->add_option("--seed", gc_seed, "Random seed");
  gradcheck->add_option("--trials", gc_trials, "Number of random configurations");

  // synth
  icnn::StrokeParams params;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic stroke dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--size", params.size, "Square image extent");
  synth->add_option("--count", params.count, "Number of images");
  synth->add_option("--strokes", params.strokes, "Strokes per image");
  synth->add_option("--len", params.length, "Stroke length in pixels");
  synth->add_option("--angle", params.angle_deg, "Stroke orientation in degrees (0 = horizontal)");
  synth->add_option("--thickness", params.thickness, "Stroke thickness in pixels");
  synth->add_option("--noise", params.noise_stddev, "Gaussian pixel noise stddev");
  synth->add_option("--seed", params.seed, "Random seed");

  // train
  std::string train_config, train_data, train_arch = "irregular", train_out;
  std::int64_t snapshot_every = 100;
  auto* train = app.add_subcommand("train", "Train the toy segmentation net");
  train->add_option("--config", train_config, "key=value config file (defaults apply when omitted)");
  train->add_option("--data", train_data, "Dataset directory from `synth`")->required();
  train->add_option("--arch", train_arch, "irregular | regular");
  train->add_option("--out", train_out, "Output model file")->required();
  train->add_option("--snapshot-every", snapshot_every, "Snapshot cadence in iterations (0 = off)");

  // dump-shapes
  std::string dump_in, dump_out;
  auto* dump = app.add_subcommand("dump-shapes", "Emit per-tap position trajectories as JSON");
  dump->add_option("--in", dump_in, "Model file or snapshots JSON")->required();
  dump->add_option("--out", dump_out, "Output JSON file")->required();

  // heatmap
  std::string hm_model, hm_image, hm_pixel, hm_out;
  icnn::Index hm_class = 0;
  auto* heatmap = app.add_subcommand("heatmap", "Input-gradient map for one output pixel");
  heatmap->add_option("--model", hm_model, "Model file")->required();
  heatmap->add_option("--image", hm_image, "Image tensor (ICT1)")->required();
  heatmap->add_option("--pixel", hm_pixel, "Output pixel as R,C")->required();
  heatmap->add_option("--class", hm_class, "Class channel index");
  heatmap->add_option("--out", hm_out, "Output prefix for .csv and .pgm")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gradcheck) return cmd_gradcheck(gc_seed, gc_trials);
    if (*synth) return cmd_synth(params, synth_out);
    if (*train) return cmd_train(train_config, train_data, train_arch, train_out, snapshot_every);
    if (*dump) return cmd_dump_shapes(dump_in, dump_out);
    if (*heatmap) return cmd_heatmap(hm_model, hm_image, hm_pixel, hm_class, hm_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
